pub mod error;
pub mod evolution;
pub mod measures;
pub mod numerics;
pub mod series;
pub mod walk;

pub use error::{Error, Result};
