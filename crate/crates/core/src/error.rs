//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("unknown sample ids: {0:?}")]
    UnknownSampleIds(Vec<String>),
    #[error("unknown metric id: {0}")]
    UnknownMetric(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("undefined input for {op}: {reason}")]
    UndefinedInput { op: &'static str, reason: String },
    #[error("non-finite value for metric {metric}")]
    NonFinite { metric: String },
    #[error("dimension {0} has no available metrics")]
    EmptyDimension(usize),
    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("not enough samples: need {need}, have {have}")]
    TooFewSamples { need: usize, have: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("missing performance records for ids: {0:?}")]
    MissingRecords(Vec<String>),
    #[error("missing confidence field {field} for style {style}")]
    MissingConfidence { field: &'static str, style: String },
    #[error("degenerate measurement: all partial correlations are zero")]
    DegenerateMeasurement,
    #[error("k = {k} exceeds sample count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("budget {budget} exceeds unlabeled pool size {pool}")]
    BudgetTooLarge { budget: usize, pool: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
