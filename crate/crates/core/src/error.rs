use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("operation is not cyclic for this state: commutator norm {norm:e} exceeds {tol:e}")]
    NotCyclic { norm: f64, tol: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("outside the domain of this operation: {0}")]
    Domain(String),

    #[error("ambiguous rotation recovery: {0}")]
    AmbiguousRecovery(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Internal-consistency failures point at a numerical or logic defect
    /// rather than bad user input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::InternalConsistency(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
