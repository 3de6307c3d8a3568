use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::graph::{Direction, EdgeId, VertexId, WeightedDigraph};
use crate::hierarchy::{build_hierarchy, Hierarchy, NodeId};
use crate::reduction::ReductionResult;
use crate::walk::{exit_matrix, ExitMatrix, ExitTable};

use super::transcript::StepKind;

type Lazy<T> = OnceLock<Result<Arc<T>>>;

/// An Eulerian walk graph with its hierarchy and lazily built exit tables.
/// Safe to share across threads; every table is computed at most once.
pub struct WalkContext {
    graph: WeightedDigraph,
    hierarchy: Hierarchy,
    /// Out-boundary of every node, increasing edge ids.
    exits: Vec<Vec<EdgeId>>,
    /// `child[x * n + v]`: child of `x` containing `v`.
    child: Vec<NodeId>,
    matrices: Vec<Lazy<ExitMatrix>>,
    /// Per node: the unconditioned table, then one per exit edge.
    tables: Vec<Vec<Lazy<ExitTable>>>,
}

impl WalkContext {
    pub fn new(graph: WeightedDigraph) -> Result<Self> {
        let hierarchy = build_hierarchy(&graph)?;
        let n = graph.n();
        let exits: Vec<Vec<EdgeId>> =
            hierarchy.nodes().iter().map(|x| graph.boundary_edges(&x.vertices, Direction::Out)).collect();
        let mut child = vec![NodeId::MAX; hierarchy.len() * n];
        for (x, node) in hierarchy.nodes().iter().enumerate() {
            for &c in &node.children {
                for &v in hierarchy.node(c).vertices.members() {
                    child[x * n + v] = c;
                }
            }
        }
        let matrices = (0..hierarchy.len()).map(|_| OnceLock::new()).collect();
        let tables = exits.iter().map(|e| (0..=e.len()).map(|_| OnceLock::new()).collect()).collect();
        Ok(Self { graph, hierarchy, exits, child, matrices, tables })
    }

    pub fn graph(&self) -> &WeightedDigraph {
        &self.graph
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn exits(&self, node: NodeId) -> &[EdgeId] {
        &self.exits[node]
    }

    #[inline]
    pub(crate) fn child_of(&self, node: NodeId, v: VertexId) -> NodeId {
        self.child[node * self.graph.n() + v]
    }

    #[inline]
    pub(crate) fn kind_of(&self, node: NodeId) -> StepKind {
        if self.hierarchy.node(node).is_leaf() {
            StepKind::Leaf
        } else {
            StepKind::Open
        }
    }

    fn matrix(&self, node: NodeId) -> Result<Arc<ExitMatrix>> {
        self.matrices[node]
            .get_or_init(|| exit_matrix(&self.graph, &self.hierarchy.node(node).vertices).map(Arc::new))
            .clone()
    }

    /// Exit table of `node`, conditioned on leaving through `exit` when given.
    pub fn exit_table(&self, node: NodeId, exit: Option<EdgeId>) -> Result<Arc<ExitTable>> {
        let slot = match exit {
            None => 0,
            Some(e) => match self.exits[node].binary_search(&e) {
                Ok(i) => i + 1,
                Err(_) => {
                    return Err(crate::Error::InvalidArgument(format!("edge {e} does not leave node {node}")))
                }
            },
        };
        self.tables[node][slot]
            .get_or_init(|| {
                let kids = self
                    .hierarchy
                    .node(node)
                    .children
                    .iter()
                    .map(|&c| self.matrix(c))
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<&ExitMatrix> = kids.iter().map(|m| m.as_ref()).collect();
                ExitTable::assemble(&self.graph, &self.hierarchy.node(node).vertices, &refs, exit)
                    .map(Arc::new)
            })
            .clone()
    }
}

/// Everything needed to sample arborescences rooted at one vertex.
pub struct RootContext {
    pub reduction: ReductionResult,
    /// Walks run on the edge flip of the reduced Eulerian graph.
    pub walk: WalkContext,
}

impl RootContext {
    pub fn new(g: &WeightedDigraph, root: VertexId) -> Result<Self> {
        let reduction = crate::reduction::reduce(g, root)?;
        let walk = WalkContext::new(reduction.eulerian_graph.reverse())?;
        Ok(Self { reduction, walk })
    }
}
