//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A required input column is missing or the header is unusable.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A feature that must be standardized is constant on the training split.
    #[error("zero variance: feature '{feature}' is constant on the training split")]
    ZeroVariance { feature: &'static str },

    #[error("training diverged: {0}")]
    Diverged(String),

    /// Tree node statistics required by an analysis are absent or inconsistent.
    #[error("missing cover statistics: {0}")]
    MissingCover(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },
}
