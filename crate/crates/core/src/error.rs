use thiserror::Error;

/// Errors raised by the recovery library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (anti-Hermitian part {deviation:.3e} relative)")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("tensor dimension {dim} exceeds the resource guard {limit}")]
    GuardExceeded { dim: usize, limit: usize },

    #[error("invalid subsystem index set: {0}")]
    InvalidSubsystems(String),

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("design construction failed to reach tolerance (best theta_inf {best_residual:.3e})")]
    Construction { best_residual: f64 },

    #[error("malformed file, field `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
