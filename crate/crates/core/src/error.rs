use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a schema or structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A distribution has no usable spread (all-zero histogram, max = min, ...).
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("insufficient supply: {0}")]
    InsufficientSupply(String),

    /// Unmet per-interval demand under the `fail` deficit rule.
    #[error("unmet demand: {0}")]
    Deficit(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line tool: 2 for bad input,
    /// 1 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
