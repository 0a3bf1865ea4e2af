//! Command-line front end: labeling, querying, oracle checks and the
//! experiments.

pub mod args;
pub mod commands;
pub mod experiments;
pub mod metrics;
pub mod render;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    /// A guarantee that must always hold was broken.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(uadb_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<uadb_core::Error> for CliError {
    fn from(e: uadb_core::Error) -> CliError {
        match e {
            uadb_core::Error::Sandwich { .. } => CliError::Invariant(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

impl CliError {
    /// 2 for broken invariants, 1 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 2,
            _ => 1,
        }
    }
}
