//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by estimation, training construction, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dim(String),

    /// An argument is outside its valid domain.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// The requested path count exceeds what the geometry can resolve.
    #[error("identifiability: {0}")]
    Identifiability(String),

    /// A numerical step degenerated (rank collapse, division blow-up, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// LAPACK/BLAS backend failure.
    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
