use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid simplex: {0}")]
    InvalidSimplex(String),

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("covariance is not positive definite (lambda_min = {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("gap condition violated at context {context:?}: observed gap {observed}, claimed {claimed}")]
    GapViolation {
        context: Vec<f64>,
        observed: f64,
        claimed: f64,
    },

    #[error("corruption budget exceeded: strategy needs {needed}, budget is {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
