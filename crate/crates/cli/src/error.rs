//! Error taxonomy for the runner: configuration problems exit with code 1,
//! numerical or runtime failures with code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    /// Core errors raised while interpreting user input are configuration
    /// errors; everything else is a runtime/numerical failure.
    pub fn from_core(e: sigmax_sim::Error) -> Self {
        use sigmax_sim::Error as E;
        match e {
            E::InvalidParams(_) | E::Parse(_) | E::DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("io: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
