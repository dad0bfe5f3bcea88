use thiserror::Error;

use crate::model::Party;

pub type Result<T, E = GameError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least {min}, got {found}")]
    DimensionTooSmall { min: usize, found: usize },

    #[error("aggregate of party {party} has norm {norm} > 1 (enable rescaling to normalize)")]
    NormalizationViolated { party: Party, norm: f64 },

    #[error("vector is outside the policy domain: {0}")]
    OutsideDomain(String),

    #[error("party {0} has a zero aggregate preference vector")]
    DegenerateParty(Party),

    #[error("total aggregate Q is zero; polar angles are undefined")]
    ZeroConsensus,

    #[error("index ({i}, {j}) out of range for dimension {k}")]
    IndexOutOfRange { i: usize, j: usize, k: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid size {required} exceeds the cap {cap}")]
    GridTooLarge { required: usize, cap: usize },

    #[error("too few records: need at least {min}, got {found}")]
    TooFewRecords { min: usize, found: usize },

    #[error("failed to read preference data: {0}")]
    Io(String),
}

impl GameError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        GameError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
