use lexswap_core::Error as CoreError;
use thiserror::Error;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad configuration, missing inputs, invalid input data shape.
    #[error("{0}")]
    Usage(String),
    /// Failure while processing data.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Argument(_) | CoreError::Validation(_) => CliError::Usage(e.to_string()),
            CoreError::Io { .. } | CoreError::Data(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
