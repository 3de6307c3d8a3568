//! Sampling random arborescences of weighted directed graphs.
//!
//! The hierarchical sampler shortcuts a random walk through a hierarchy of
//! weight-clustered vertex sets and reads the first-visit edges off the
//! shortcut transcript. A sequential Aldous-Broder walk serves as baseline and
//! an exact determinant/enumeration oracle serves as ground truth.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hierarchy;
mod linalg;
pub mod oracle;
pub mod plan;
pub mod reduction;
pub mod sampler;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Arborescence, Direction, Edge, EdgeId, VertexId, VertexSubset, WeightedDigraph};
