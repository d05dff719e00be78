use thiserror::Error;

/// Errors raised by model construction, the solvers and the evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfgError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} row {index:?} is not a probability vector: {reason}")]
    InvalidDistribution {
        what: &'static str,
        index: Vec<usize>,
        reason: String,
    },

    /// An anchor (or old iterate) has zero mass where the other argument has positive mass.
    #[error("infinite divergence: anchor has zero mass at (h={h}, s={s}, a={a})")]
    InfiniteDivergence { h: usize, s: usize, a: usize },

    #[error("{what} has a zero entry at (h={h}, s={s}, a={a}); full support is required")]
    ZeroEntry {
        what: &'static str,
        h: usize,
        s: usize,
        a: usize,
    },

    #[error("non-finite value encountered in {what}")]
    NonFinite { what: &'static str },

    #[error("instance too large: {candidates} candidates exceed the limit of {limit}")]
    TooLarge { candidates: u128, limit: u128 },

    #[error("reward of kind `{0}` cannot be serialized")]
    Unserializable(&'static str),

    #[error("model document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, MfgError>;
