use thiserror::Error;

/// Errors raised by construction, measures and the evaluation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution needs at least 2 labels, got {0}")]
    TooFewLabels(usize),

    #[error("non-finite probability at label {index}")]
    NonFinite { index: usize },

    #[error("negative probability {value} at label {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, outside the accepted band around 1")]
    NotNormalized { sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("credal set needs at least one generator")]
    EmptyCredalSet,

    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("weights must be nonnegative and sum to 1")]
    InvalidWeights,

    #[error("LP solver did not reach optimality within {iterations} pivots")]
    SolverNonConvergence { iterations: usize },

    #[error(
        "Hartley measures unavailable for K = {k} (cap {cap}): the Möbius transform needs 2^K subsets"
    )]
    HartleyUnavailable { k: usize, cap: usize },

    #[error("non-finite uncertainty score for instance {index}")]
    NonFiniteScore { index: usize },

    #[error("nothing to rank")]
    EmptyRanking,

    #[error("instance {index} has no true label")]
    MissingLabel { index: usize },

    #[error("need at least 2 bins and at least as many instances as bins (bins = {bins}, instances = {instances})")]
    InvalidBinning { bins: usize, instances: usize },

    #[error("relative likelihoods are not attached to this dataset")]
    MissingLikelihoods,

    #[error("invalid relative likelihoods: {0}")]
    InvalidLikelihoods(String),

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
