use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("code {code} out of range for codebook of size {size}")]
    CodeOutOfRange { code: u64, size: u64 },

    #[error("not enough evidence: {0}")]
    NotEnoughEvidence(String),

    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),

    #[error("unknown language: {0}")]
    UnknownLanguage(String),

    #[error("unbalanced or unknown tag: {0}")]
    InvalidTag(String),

    #[error("timing/word misalignment: {0}")]
    TimingMismatch(String),

    #[error("missing adapter: {0}")]
    MissingAdapter(String),

    #[error("adapter failed: {0}")]
    AdapterFailed(String),

    #[error("optimization diverged at step {step}: {what}")]
    Divergence { step: usize, what: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
