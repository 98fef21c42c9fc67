use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("weights must sum to 1 (sum is {sum})")]
    WeightSum { sum: f64 },

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },

    #[error("modality {modality} has rank-zero centered data (constant samples)")]
    DegenerateData { modality: usize },

    #[error("centered data has rank zero (constant samples)")]
    ZeroRankData,

    #[error("modality {modality} has {found} samples, expected {expected}")]
    SampleCount {
        modality: usize,
        expected: usize,
        found: usize,
    },

    #[error("prescribed covariance {index} is {found}x{found}, expected {expected}x{expected}")]
    CovarianceDimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("prescribed covariance is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("prescribed covariance is not positive semidefinite")]
    NotPsd,

    #[error("tuple is not feasible: {0}")]
    Infeasible(String),

    #[error("trace ratio is undefined: every prescribed covariance is zero")]
    ZeroDenominator,

    #[error("modality index {index} out of range (model has {count} modalities)")]
    ModalityIndex { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("sample index {0} appears in both the training and the test set")]
    IndexOverlap(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn dim_err(op: &'static str, detail: String) -> Error {
    Error::Dimension { op, detail }
}
