use thiserror::Error;

/// Errors produced by tensor construction, factorizations and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid shape {shape:?}: every extent must be at least 1 and the shape non-empty")]
    InvalidShape { shape: Vec<usize> },

    #[error("data length {actual} does not match shape product {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("matrix is rank deficient: numerical rank {rank} < required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("matrix is not symmetric")]
    MatrixNotSymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("tensor shape {shape:?} is not cubical")]
    NotCubical { shape: Vec<usize> },

    #[error("tensor is not symmetric within tolerance {tol:e}")]
    NotSymmetric { tol: f64 },

    #[error("tensor is not partial symmetric within tolerance {tol:e}")]
    NotPartialSymmetric { tol: f64 },

    #[error("reconstruction residual {residual:e} exceeds tolerance {tolerance:e}")]
    Reconstruction { residual: f64, tolerance: f64 },

    #[error("decomposition kind {found} not supported here (expected {expected})")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("operation requires even order, got {0}")]
    OddOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
