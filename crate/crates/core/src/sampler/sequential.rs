//! Baseline: the literal time-reversed walk run until every vertex is visited.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::graph::{Arborescence, VertexId, WeightedDigraph};
use crate::plan::{RandomnessPlan, TaskId};
use crate::reduction::{reduce, root_law};
use crate::walk::{time_reversal, StationaryDistribution, StepSampler};

struct ReversedWalk {
    graph: WeightedDigraph,
    steps: StepSampler,
}

impl ReversedWalk {
    fn new(graph: WeightedDigraph) -> Self {
        let steps = StepSampler::new(&graph);
        Self { graph, steps }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialOutcome {
    pub arborescence: Arborescence,
    /// Walk steps until the last vertex was first visited.
    pub steps: u64,
}

pub struct SequentialSampler {
    g: WeightedDigraph,
    fixed_root: Option<VertexId>,
    law: Option<StationaryDistribution>,
    /// Time reversal of the input when it is strongly connected.
    shared: Option<ReversedWalk>,
    /// Otherwise the reversal of the patched Eulerian graph, per root.
    per_root: Vec<OnceLock<Result<ReversedWalk>>>,
}

// The walk structures only hold plain data.
impl std::fmt::Debug for SequentialSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SequentialSampler").field("n", &self.g.n()).field("root", &self.fixed_root).finish()
    }
}

impl SequentialSampler {
    pub fn new(g: &WeightedDigraph, root: Option<VertexId>) -> Result<Self> {
        let connected = g.is_strongly_connected();
        let law = match root {
            Some(r) => {
                if r >= g.n() {
                    return Err(Error::InvalidArgument(format!("root {r} outside 0..{}", g.n())));
                }
                if !connected {
                    reduce(g, r)?;
                }
                None
            }
            None => Some(root_law(g)?),
        };
        let shared = if connected { Some(ReversedWalk::new(time_reversal(g)?)) } else { None };
        Ok(Self {
            g: g.clone(),
            fixed_root: root,
            law,
            shared,
            per_root: (0..g.n()).map(|_| OnceLock::new()).collect(),
        })
    }

    fn walk(&self, r: VertexId) -> Result<&ReversedWalk> {
        if let Some(w) = &self.shared {
            return Ok(w);
        }
        self.per_root[r]
            .get_or_init(|| Ok(ReversedWalk::new(reduce(&self.g, r)?.eulerian_graph.reverse())))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn sample(&self, seed: u64, sample: u64) -> Result<SequentialOutcome> {
        let plan = RandomnessPlan::new(seed);
        let r = match (self.fixed_root, &self.law) {
            (Some(r), _) => r,
            (None, Some(law)) => law.sample(&plan.stream(&TaskId::Root { sample }).variate(0)),
            (None, None) => unreachable!(),
        };
        let n = self.g.n();
        let m = self.g.m();
        let walk = self.walk(r)?;
        let mut stream = plan.stream(&TaskId::Baseline { sample });
        let mut parent = vec![None; n];
        let mut visited = vec![false; n];
        visited[r] = true;
        let mut remaining = n - 1;
        let mut u = r;
        let mut t = 0u64;
        while remaining > 0 {
            let e = walk.steps.step(u, stream.variate(t).to_f64());
            t += 1;
            u = walk.graph.edge(e).dst;
            if !visited[u] {
                visited[u] = true;
                remaining -= 1;
                debug_assert!(e < m);
                parent[u] = Some(e);
            }
        }
        Ok(SequentialOutcome { arborescence: Arborescence { root: r, parent_edge: parent }, steps: t })
    }
}

/// One arborescence from the baseline walk.
pub fn sequential_aldous_broder(g: &WeightedDigraph, seed: u64) -> Result<Arborescence> {
    Ok(SequentialSampler::new(g, None)?.sample(seed, 0)?.arborescence)
}
