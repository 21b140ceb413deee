use std::path::PathBuf;

use crate::graph::{BlockId, NodeId, Weight};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("weights must be positive, got {0}")]
    NonPositiveWeight(Weight),

    #[error("expected {expected} vertex weights, got {got}")]
    VertexWeightCount { expected: usize, got: usize },

    #[error("invalid block count k={k} for a graph with {n} vertices")]
    InvalidBlockCount { k: usize, n: usize },

    #[error("vertex {vertex} assigned to block {block} but k={k}")]
    BlockOutOfRange { vertex: usize, block: BlockId, k: usize },

    #[error("assignment has {got} entries, graph has {expected} vertices")]
    AssignmentLength { expected: usize, got: usize },

    #[error("size bound {bound} is below the heaviest vertex weight {max_vertex_weight}")]
    BoundTooSmall { bound: Weight, max_vertex_weight: Weight },

    #[error("move of vertex {0} does not match the current partition")]
    StaleMove(NodeId),

    #[error("instance too large for exhaustive search: {0} assignments")]
    InstanceTooLarge(f64),

    #[error("no partition satisfies the balance constraint")]
    NoBalancedPartition,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
