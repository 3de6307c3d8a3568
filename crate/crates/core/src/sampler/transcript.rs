use std::collections::{BTreeMap, HashMap};

use crate::graph::{EdgeId, VertexId, WeightedDigraph};
use crate::hierarchy::{Hierarchy, NodeId};

/// How a transcript element may be refined further.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// A single vertex; nothing hidden.
    Leaf,
    /// A cluster whose inner walk can still be spliced in.
    Open,
    /// A cluster whose inner walk was dropped for exceeding the budget.
    Collapsed,
}

/// One element of a transcript: the walk is inside `node` and leaves it by `edge`.
/// `edge` is `None` only on the final element of an unconditioned or truncated transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub node: NodeId,
    pub edge: Option<EdgeId>,
    pub kind: StepKind,
    /// The jumping-edge call that produced this element.
    pub call: u32,
}

/// Identity of a jumping-edge call: its randomness is a function of this key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CallKey {
    pub node: NodeId,
    pub start: VertexId,
    pub exit: Option<EdgeId>,
    pub slot: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub node: NodeId,
    pub start: VertexId,
    pub exit: Option<EdgeId>,
    pub steps: Vec<Step>,
    /// The walk was cut at a horizon before its natural end.
    pub truncated: bool,
}

impl Transcript {
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.steps.iter().filter_map(|s| s.edge)
    }

    /// Whether every element but a possible final marker is a single vertex.
    pub fn is_fully_expanded(&self) -> bool {
        let body = match self.steps.last() {
            Some(s) if s.kind == StepKind::Collapsed => &self.steps[..self.steps.len() - 1],
            _ => &self.steps[..],
        };
        body.iter().all(|s| s.kind == StepKind::Leaf)
    }

    /// Checks that the elements chain into a walk: each element contains the
    /// head of the previous edge and the tail of its own edge, and each edge
    /// leaves its element.
    pub fn validate(&self, g: &WeightedDigraph, h: &Hierarchy) -> Result<(), String> {
        let mut at = self.start;
        for (i, s) in self.steps.iter().enumerate() {
            if !h.contains(s.node, at) {
                return Err(format!("element {i} does not contain entry vertex {at}"));
            }
            if s.kind == StepKind::Leaf && !h.node(s.node).is_leaf() {
                return Err(format!("element {i} is marked as a vertex but is a cluster"));
            }
            let Some(e) = s.edge else {
                if i + 1 != self.steps.len() {
                    return Err(format!("element {i} has no edge but is not last"));
                }
                break;
            };
            let edge = g.edge(e);
            if !h.contains(s.node, edge.src) || h.contains(s.node, edge.dst) {
                return Err(format!("edge {e} of element {i} does not leave it"));
            }
            if s.kind == StepKind::Leaf && edge.src != at {
                return Err(format!("edge {e} does not start at vertex {at}"));
            }
            at = edge.dst;
        }
        if let (Some(exit), Some(last)) = (self.exit, self.steps.last()) {
            if last.edge != Some(exit) {
                return Err("transcript does not end at its conditioning edge".into());
            }
        }
        Ok(())
    }
}

/// For each vertex first entered along the transcript, the entering edge.
pub fn extract_first_visits(
    g: &WeightedDigraph,
    steps: &[Step],
    start: VertexId,
) -> BTreeMap<VertexId, EdgeId> {
    let mut first = BTreeMap::new();
    for e in steps.iter().filter_map(|s| s.edge) {
        let v = g.edge(e).dst;
        if v != start {
            first.entry(v).or_insert(e);
        }
    }
    first
}

pub(crate) enum Coverage {
    /// First-visit edge of every vertex but the start.
    Covered(Vec<Option<EdgeId>>),
    /// A hidden stretch may have visited new vertices.
    Incomplete,
    /// The walk was cut before covering; a longer horizon may cover.
    NeedHorizon,
}

/// First-visit extraction that refuses to look past unexpanded clusters
/// holding unvisited vertices.
pub(crate) fn cover(
    g: &WeightedDigraph,
    h: &Hierarchy,
    steps: &[Step],
    start: VertexId,
    truncated: bool,
) -> Coverage {
    let n = g.n();
    let mut visited = vec![false; n];
    let mut parent = vec![None; n];
    visited[start] = true;
    let mut remaining = n - 1;
    for (i, s) in steps.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if s.kind != StepKind::Leaf && h.node(s.node).vertices.members().iter().any(|&v| !visited[v]) {
            let tail = i + 1 == steps.len() && s.edge.is_none();
            return if tail && truncated { Coverage::NeedHorizon } else { Coverage::Incomplete };
        }
        if let Some(e) = s.edge {
            let v = g.edge(e).dst;
            if !visited[v] {
                visited[v] = true;
                parent[v] = Some(e);
                remaining -= 1;
            }
        }
    }
    match remaining {
        0 => Coverage::Covered(parent),
        _ if truncated => Coverage::NeedHorizon,
        _ => Coverage::Incomplete,
    }
}

/// Number of extra visits served by an already used call, counted over the
/// expanded (single-vertex) elements of a transcript. Zero means every call
/// instance contributes to at most one visit of its cluster.
pub(crate) fn duplicate_call_uses(
    g: &WeightedDigraph,
    h: &Hierarchy,
    calls: &[CallKey],
    steps: &[Step],
    start: VertexId,
) -> usize {
    let mut visit = vec![0u64; h.len()];
    for x in h.ancestors(h.leaf(start)) {
        visit[x] = 1;
    }
    let mut seen: HashMap<u32, u64> = HashMap::new();
    let mut extra = 0;
    for s in steps {
        if s.kind == StepKind::Leaf {
            let node = calls[s.call as usize].node;
            let id = visit[node];
            match seen.get(&s.call) {
                Some(&prev) if prev != id => {
                    extra += 1;
                    seen.insert(s.call, id);
                }
                Some(_) => {}
                None => {
                    seen.insert(s.call, id);
                }
            }
        }
        if let Some(e) = s.edge {
            let edge = g.edge(e);
            let top = h.jumping_node(e);
            for x in h.ancestors(h.leaf(edge.dst)) {
                if x == top {
                    break;
                }
                visit[x] += 1;
            }
        }
    }
    extra
}
