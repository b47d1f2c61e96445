use std::io;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("rank-deficient channel at snapshot {t}, subcarrier {l} (condition number {condition:e})")]
    RankDeficient { t: usize, l: usize, condition: f64 },

    #[error("user {k} has an all-zero channel and cannot be normalized")]
    DegenerateUser { k: usize },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("per-AP antenna count {requested} exceeds the {available} elements available")]
    Capacity { requested: usize, available: usize },

    #[error("user {k} at ({x:.3}, {y:.3}) lies outside the scene region")]
    Placement { k: usize, x: f64, y: f64 },

    #[error("could not place {k} users after {attempts} rejection attempts")]
    InfeasibleLayout { k: usize, attempts: usize },

    #[error("no finite samples to aggregate")]
    EmptySample,

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("truncated channel file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
