use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed at gamma = {gamma}: {source}")]
    Compute {
        gamma: f64,
        #[source]
        source: ptwalk::Error,
    },
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Output(_) => ExitCode::from(2),
            CliError::Compute { .. } => ExitCode::from(3),
        }
    }
}
