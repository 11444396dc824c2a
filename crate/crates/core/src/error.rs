use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("dense diagonalization refused: dimension {dim} exceeds cap {cap}; reduce L_s, N or n_max, or raise the cap")]
    DenseCap { dim: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
