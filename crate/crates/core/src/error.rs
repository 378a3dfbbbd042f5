use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("stationary distribution did not converge within {cap} iterations")]
    NonConvergence { cap: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid renewal family: {0}")]
    InvalidFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty series")]
    EmptySeries,

    #[error("no valid history length: every candidate had a failed fold")]
    NoValidHistoryLength,

    #[error("insufficient span: {available} < {required}")]
    InsufficientSpan { available: usize, required: usize },

    #[error("{path}: {message}")]
    Ingest { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
