use thiserror::Error;

use crate::graph::Side;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{side:?} index {index} out of range (side has {len} nodes)")]
    Index { side: Side, index: usize, len: usize },

    #[error("cannot sample from {0:?} side: no degree mass")]
    Sampling(Side),

    #[error("power-law fit needs more data: {reason} (tail size {n_tail})")]
    Fit { reason: String, n_tail: usize },

    #[error("largest component has {size} nodes, above the exact-diameter limit of {limit}; use diameter_approx")]
    ComponentTooLarge { size: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyGraph,

    #[error("bipartization failed: {0}")]
    Bipartize(String),

    #[error("observer failed at step {step}: {message}")]
    Observer { step: u64, message: String },

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}
