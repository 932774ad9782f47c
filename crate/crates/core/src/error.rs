//! Error types shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV row with the wrong number of columns. Rows are 1-based and count
    /// data rows only (the header is row 0).
    #[error("row {row}: expected {expected} columns, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: value {value:?} is not a finite number")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: label {label} out of range for {class_count} classes")]
    LabelOutOfRange {
        row: usize,
        label: i64,
        class_count: usize,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("row {row} is not a probability distribution (sum {sum})")]
    NotADistribution { row: usize, sum: f64 },

    #[error("class count mismatch: model expects {expected}, data has {found}")]
    ClassCountMismatch { expected: usize, found: usize },

    /// A training or sampling run produced a non-finite objective.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("unsupported model file version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file error: {0}")]
    ModelFile(String),
}

impl Error {
    /// True for failures of numerical nature (divergence) as opposed to
    /// input/configuration validation. The CLI maps these to exit code 2.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Divergence(_))
    }
}
