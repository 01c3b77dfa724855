use std::io;

use thiserror::Error;

/// Errors produced anywhere in the link simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty codebook")]
    EmptyCodebook,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("payload of {requested} symbols exceeds grid data capacity of {capacity} cells")]
    GridOverflow { requested: usize, capacity: usize },
    #[error("channel delay of {delay} samples does not fit inside a cyclic prefix of {cp_len}")]
    DelayExceedsCp { delay: usize, cp_len: usize },
    #[error("zero pilot symbol at cell ({subcarrier}, {symbol})")]
    ZeroPilot { subcarrier: usize, symbol: usize },
    #[error("reference channel has zero norm")]
    ZeroNormReference,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("missing artifact from {stage}: {path}")]
    MissingArtifact { stage: &'static str, path: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
