use thiserror::Error;

/// Everything that can go wrong while synthesizing or simulating an observer network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DuioError {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NonSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    /// The subspace handed to a friend/decomposition routine is not invariant.
    #[error("subspace is not invariant in {op} (residual {residual:.3e})")]
    NotInvariant { op: &'static str, residual: f64 },

    #[error("could not place the quotient spectrum inside the good region: {0}")]
    StabilizationFailed(String),

    #[error("coupling matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("joint condition violated: the intersection of the node subspaces has dimension {dim}")]
    JointConditionViolated { dim: usize },

    #[error("numerical blowup at t = {t}: state norm {norm:.3e}")]
    NumericalBlowup { t: f64, norm: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, DuioError>;
