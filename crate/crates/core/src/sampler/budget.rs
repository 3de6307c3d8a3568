use rand::Rng;

use crate::graph::VertexId;
use crate::walk::StepSampler;

use super::context::WalkContext;

pub const DEFAULT_BUDGET_FACTOR: u64 = 8;

/// Per-node cap on simulated jumping edges: `c n^2 m^2`.
pub fn choose_budget(n: usize, m: usize, c: u64) -> u64 {
    let (n, m) = (n as u64, m as u64);
    c.saturating_mul(n.saturating_mul(n)).saturating_mul(m.saturating_mul(m))
}

/// Default size of the answer store for a budget.
pub fn default_cache(budget: u64) -> u64 {
    budget.saturating_mul(4).max(64)
}

/// For one plain walk from `start`, the number of jumping edges of each node
/// crossed before every vertex of that node has been visited (nodes never
/// entered report 0).
pub fn jumps_before_cover<R: Rng>(ctx: &WalkContext, start: VertexId, rng: &mut R) -> Vec<u64> {
    let g = ctx.graph();
    let h = ctx.hierarchy();
    let steps = StepSampler::new(g);
    let n = g.n();
    let mut jumps = vec![0u64; h.len()];
    let mut unvisited: Vec<usize> = h.nodes().iter().map(|x| x.vertices.len()).collect();
    let mut visited = vec![false; n];
    let mark = |v: VertexId, visited: &mut Vec<bool>, unvisited: &mut Vec<usize>| {
        if !visited[v] {
            visited[v] = true;
            for x in h.ancestors(h.leaf(v)) {
                unvisited[x] -= 1;
            }
        }
    };
    mark(start, &mut visited, &mut unvisited);
    let mut u = start;
    while unvisited[h.root()] > 0 {
        let e = steps.step(u, rng.gen::<f64>());
        let j = h.jumping_node(e);
        if unvisited[j] > 0 {
            jumps[j] += 1;
        }
        u = g.edge(e).dst;
        mark(u, &mut visited, &mut unvisited);
    }
    jumps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_arithmetic() {
        assert_eq!(choose_budget(3, 3, 8), 648);
        assert_eq!(choose_budget(3, 6, 8), 2592);
        assert_eq!(choose_budget(usize::MAX, 3, 8), u64::MAX);
        assert_eq!(default_cache(10), 64);
        assert_eq!(default_cache(648), 2592);
    }
}
