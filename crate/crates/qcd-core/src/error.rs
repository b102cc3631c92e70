//! Error types shared across the toolbox.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for construction, validation, and solver failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("operator is not positive semidefinite: minimum eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("operator trace {trace} differs from 1 beyond tolerance")]
    NotUnitTrace { trace: f64 },

    #[error("vector is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("unknown subsystem label: {0}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("spectral function undefined on retained eigenvalue {eig}")]
    SpectralDomain { eig: f64 },

    #[error("solver failed with status {status}: {context}")]
    Solver { status: String, context: String },

    #[error("problem size exceeds the configured cap: {0}")]
    ResourceCap(String),

    #[error("divergence is infinite: {0}")]
    InfiniteDivergence(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
