use thiserror::Error;

/// Errors surfaced by the model, optimizer and agent layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate channel: direct channel g is zero")]
    DegenerateChannel,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("rank-one extraction failed: no feasible candidate")]
    ExtractionFailure,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
