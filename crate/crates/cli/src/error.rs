use std::path::PathBuf;

use oneshot_deblur::DeblurError;
use thiserror::Error;

/// Failures surfaced by the command-line tool, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidArgument(String),

    #[error("infeasible design: feasibility error {error:.4} over [0, {band:.4}] exceeds {limit}")]
    Infeasible { error: f64, band: f64, limit: f64 },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Library(DeblurError),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Io {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArgument(_) => 2,
            CliError::Library(DeblurError::InvalidArgument(_)) => 2,
            CliError::Infeasible { .. } => 3,
            CliError::Library(DeblurError::IllConditionedFit { .. }) => 3,
            CliError::Io { .. } => 4,
            CliError::Library(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<DeblurError> for CliError {
    fn from(err: DeblurError) -> Self {
        CliError::Library(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::InvalidArgument(msg.into()))
}
