use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("empty point set")]
    EmptyPointSet,
    #[error("point set too small: need at least {need}, have {have}")]
    TooFewPoints { need: usize, have: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("not a permutation: index {0} repeated or out of range")]
    NotAPermutation(usize),
    #[error("rotation set requires a square grid, got {w}x{h}")]
    NonSquareGrid { w: usize, h: usize },
    #[error("transformation set must have at least 2 elements, has {0}")]
    TransformSetTooSmall(usize),
    #[error("transformation set is not a group")]
    NotAGroup,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("labels missing or length mismatch")]
    BadLabels,
    #[error("invalid bound parameters: {0}")]
    InvalidParams(String),
    #[error("unknown atom kind: {0}")]
    UnknownAtomKind(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
