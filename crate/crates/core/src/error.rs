use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero vector cannot be normalized (norm {0:e})")]
    ZeroVector(f64),
    #[error("non-finite value in feature vector")]
    NonFinite,
    #[error("feature value {0} outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample is empty")]
    EmptySample,
    #[error("no cut-off selections to aggregate")]
    EmptySelection,
    #[error("no points to cluster")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid dimension: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
    #[error("class `{label}` has {count} instance(s), at least 2 required to split")]
    ClassTooSmall { label: String, count: usize },
    #[error("length mismatch: {predicted} predictions vs {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("class index {0} absent from ground truth")]
    MissingClass(usize),
    #[error("parameter grid for `{0}` has several values but no tuning dataset was given")]
    MissingTuningSet(String),
    #[error("model format error: {0}")]
    Format(String),
    #[error("unsupported model version `{0}`")]
    Version(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
