use thiserror::Error;

/// Errors produced by tail evaluation, bound search and the exact oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    /// A query or argument violates the domain constraints.
    #[error("domain error: {0}")]
    Domain(String),

    /// The next term of a tail walk is structurally zero.
    #[error("next term is structurally zero")]
    StructuralZero,

    /// The arithmetic context cannot reach the requested absolute error.
    #[error(
        "precision infeasible: {digits} digits cannot resolve an absolute error of {target:e}"
    )]
    PrecisionInfeasible { digits: u32, target: f64 },

    /// The exact-rational oracle was asked for an instance above its size guard.
    #[error("exact oracle refuses n = {n} (limit {limit})")]
    OracleTooLarge { n: u64, limit: u64 },
}

impl BoundError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BoundError::Domain(msg.into())
    }
}

pub type Result<T, E = BoundError> = std::result::Result<T, E>;
