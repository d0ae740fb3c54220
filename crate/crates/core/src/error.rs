use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("attention over an empty context")]
    EmptyContext,

    #[error("training error at parameter `{param}`: {reason}")]
    Training { param: String, reason: String },

    #[error("non-deterministic closure: forward passes disagree ({first} vs {second})")]
    Determinism { first: f64, second: f64 },

    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("crop error: {0}")]
    Crop(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("load error: {0}")]
    Load(String),

    #[error("missing paths: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingPaths(Vec<PathBuf>),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
