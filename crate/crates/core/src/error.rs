use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("read error: {0}")]
    Read(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyGraph,

    #[error("unknown node(s) in partition: {}", .0.join(", "))]
    UnknownNodes(Vec<String>),

    #[error("node assigned more than once in partition: {0}")]
    DuplicateNode(String),

    #[error("unassigned node(s): {}", .0.join(", "))]
    UnassignedNodes(Vec<String>),

    #[error("partition covers {partition} nodes but graph has {graph}")]
    PartitionMismatch { partition: usize, graph: usize },

    #[error("node index {index} out of range for graph with {n} nodes")]
    InvalidNode { index: usize, n: usize },

    #[error("exact enumeration refused: {edges} edges exceeds the limit of {limit}")]
    TooManyEdges { edges: usize, limit: usize },

    #[error("non-finite score at node {0}")]
    NonFiniteScore(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node sets differ: ranking has {ranking} nodes, reference has {reference}")]
    NodeSetMismatch { ranking: usize, reference: usize },

    #[error("curves do not share a p-grid")]
    GridMismatch,

    #[error("cache file {path} holds a different configuration")]
    CacheConflict { path: PathBuf },

    #[error("malformed cache file {path}: {message}")]
    CacheFormat { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
