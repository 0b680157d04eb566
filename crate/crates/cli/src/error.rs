use std::path::PathBuf;

use berryphase_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },

    #[error("numerical failure: {0}")]
    Numerical(CoreError),
}

impl CliError {
    /// Process exit status: 2 for bad input or unwritable output, 3 when the
    /// computation itself fails.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            // these only arise from parameter values the user supplied
            CoreError::InvalidArgument(m) => CliError::Config(m),
            CoreError::InvalidStatistics(m) => CliError::Config(m),
            CoreError::InvalidSpin(l) => CliError::Config(format!("invalid angular momentum l = {l}")),
            other => CliError::Numerical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
