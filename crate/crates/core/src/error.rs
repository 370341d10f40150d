use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: node id {id} does not fit in 32 bits")]
    Overflow { line: usize, id: u64 },

    #[error("node {node} has no edges, cannot compute degree normalization")]
    Degree { node: usize },

    #[error("invalid tile geometry {blk_h}x{blk_w}: both dimensions must be >= 1")]
    Geometry { blk_h: usize, blk_w: usize },

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{what} index {index} out of range (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("malformed graph: {0}")]
    Invalid(String),

    #[error("bad SGT1 file: {0}")]
    Format(String),

    #[error("run exceeded the {cap_ms} ms time cap ({elapsed_ms:.1} ms)")]
    Timeout { cap_ms: u64, elapsed_ms: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
