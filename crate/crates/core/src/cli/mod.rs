//! Config-driven experiment runner behind the `gwp` binary.
//!
//! Exit codes: 0 ok, 1 usage or config, 2 numerical failure, 3 invariant
//! violation.

pub mod check;
pub mod config;
pub mod plot;
pub mod simulate;

use crate::error::GwpError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Invariant(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

/// Config-shaped library errors exit 1; everything else is numerical.
impl From<GwpError> for CliError {
    fn from(e: GwpError) -> Self {
        match e {
            GwpError::InvalidConfig(_) | GwpError::Unsupported(_) | GwpError::QuadratureCost { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
