use alloc::string::String;

/// Errors produced by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("invalid label schema: {0}")]
    InvalidSchema(String),
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("row {row}: unknown label `{label}`")]
    UnknownLabel { row: usize, label: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("class index {index} out of range for {class_count} classes")]
    ClassOutOfRange { index: usize, class_count: usize },
    #[error("operation needs at least two classes")]
    TooFewClasses,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("example `{0}` has no gold label")]
    MissingGold(String),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;
