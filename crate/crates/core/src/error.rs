use crate::numerics::NumericsError;

/// Errors raised by the walk, evolution and measure layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("exceptional point at gamma = {gamma}, k = {k} (a = {a}); shift the momentum grid by half a step")]
    ExceptionalPoint { gamma: f64, k: f64, a: f64 },
    #[error("no PT transition for theta1 = {theta1}, theta2 = {theta2}")]
    NoTransition { theta1: f64, theta2: f64 },
    #[error("metric inversion failed at k = {k}, t = {t}")]
    SingularMetric { k: f64, t: u32 },
    #[error("states belong to different formalisms ({0} vs {1})")]
    FormalismMismatch(String, String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid momentum grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
