//! Error classification for the exit-code contract: 0 success,
//! 1 validation error, 2 internal error.

use capcur_core::error::CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad input data, arguments or contract violations.
    Validation(String),
    /// Unexpected failures: output write errors, serialization bugs.
    Internal(String),
}

impl CliError {
    pub fn validation(msg: impl ToString) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn internal(msg: impl ToString) -> Self {
        CliError::Internal(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}
