use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid frame, channel or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Exhaustive enumeration would exceed the search-space guard.
    #[error("capacity guard: {candidates} candidates exceed the limit of {limit}")]
    Capacity { candidates: f64, limit: u64 },

    /// A routine that needs a Hermitian operand received something else.
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    /// Cholesky factorization met a non-positive pivot.
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    /// Input violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
