use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

/// Errors surfaced by graph construction, linear algebra, sampling and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vertex {vertex} cannot reach the root {root}")]
    UnreachableVertex { vertex: VertexId, root: VertexId },
    #[error("graph is not strongly connected (vertex {vertex} is not mutually reachable with vertex 0)")]
    NotStronglyConnected { vertex: VertexId },
    #[error("walk did not cover the graph after {rounds} budget doublings")]
    CoverageFailure { rounds: u32 },
    #[error("graph has {n} vertices; exhaustive enumeration is limited to {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("linear system is singular or ill-conditioned (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },
    #[error("walk from vertex {vertex} can never leave the cluster")]
    TrappedCluster { vertex: VertexId },
    #[error("conditioning exit is unreachable from vertex {vertex}")]
    ZeroConditioning { vertex: VertexId },
    #[error("no cycle closes edge {edge}")]
    NoCycle { edge: EdgeId },
    #[error("sampled arborescence is not in the catalog: {tree}")]
    UnknownTree { tree: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::InvalidGraph(_) => 2,
            Error::UnreachableVertex { .. } | Error::NotStronglyConnected { .. } => 3,
            Error::CoverageFailure { .. } => 4,
            Error::TooLarge { .. } => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
