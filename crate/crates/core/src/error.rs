use thiserror::Error;

/// Errors produced by the noon-state toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoonError {
    #[error("dimension mismatch: expected {expected} photons, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("photon number {requested} exceeds the exact-average capacity of {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("state has zero norm and cannot be normalized")]
    ZeroNorm,

    #[error("density matrix must be trace-one for this operation")]
    NotTraceOne,

    #[error("state has no weight in the noon subspace; conditioning is undefined")]
    DegenerateSubspace,

    #[error("outcome {outcome} has zero probability but nonzero derivative {derivative:e}")]
    SingularOutcome { outcome: usize, derivative: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("no finite optimum: {0}")]
    Unbounded(String),

    #[error("optimal photon number {0:e} exceeds the exactly representable integer range")]
    PhotonOverflow(f64),

    #[error("empty shot record")]
    EmptyCounts,

    #[error("density-matrix invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T, E = NoonError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> NoonError {
    NoonError::InvalidArgument(msg.into())
}
