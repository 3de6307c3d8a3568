use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
}

/// Which side of a vertex set an edge is counted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Edges leaving the set.
    Out,
    /// Edges entering the set.
    In,
}

/// Directed multigraph with positive edge weights. Edge ids are the insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

impl WeightedDigraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} ({} -> {}) references a vertex outside 0..{n}",
                    e.src, e.dst
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} has non-positive or non-finite weight {}",
                    e.weight
                )));
            }
            out_adj[e.src].push(id);
            in_adj[e.dst].push(id);
        }
        Ok(Self { n, edges, out_adj, in_adj })
    }

    pub fn from_triples(n: usize, triples: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let edges = triples.iter().map(|&(src, dst, weight)| Edge { src, dst, weight }).collect();
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_adj[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: VertexId) -> f64 {
        self.out_adj[v].iter().map(|&e| self.edges[e].weight).sum()
    }

    pub fn in_degree(&self, v: VertexId) -> f64 {
        self.in_adj[v].iter().map(|&e| self.edges[e].weight).sum()
    }

    /// Edges crossing the boundary of `s`, in increasing id order.
    pub fn boundary_edges(&self, s: &VertexSubset, dir: Direction) -> Vec<EdgeId> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| match dir {
                Direction::Out => s.contains(e.src) && !s.contains(e.dst),
                Direction::In => !s.contains(e.src) && s.contains(e.dst),
            })
            .map(|(id, _)| id)
            .collect()
    }

    /// Weighted in-degree equals weighted out-degree at every vertex, up to `rel_tol`.
    pub fn is_eulerian(&self, rel_tol: f64) -> bool {
        (0..self.n).all(|v| {
            let (din, dout) = (self.in_degree(v), self.out_degree(v));
            (din - dout).abs() <= rel_tol * din.max(dout).max(f64::MIN_POSITIVE)
        })
    }

    /// Largest `|in - out| / max(in, out)` over all vertices.
    pub fn eulerian_residual(&self) -> f64 {
        (0..self.n)
            .map(|v| {
                let (din, dout) = (self.in_degree(v), self.out_degree(v));
                let scale = din.max(dout);
                if scale == 0.0 {
                    0.0
                } else {
                    (din - dout).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    /// Vertices reachable from `src` along edges passing `keep`.
    fn reach(&self, src: VertexId, forward: bool, keep: impl Fn(EdgeId) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([src]);
        seen[src] = true;
        while let Some(u) = queue.pop_front() {
            let adj = if forward { &self.out_adj[u] } else { &self.in_adj[u] };
            for &e in adj {
                if !keep(e) {
                    continue;
                }
                let x = if forward { self.edges[e].dst } else { self.edges[e].src };
                if !seen[x] {
                    seen[x] = true;
                    queue.push_back(x);
                }
            }
        }
        seen
    }

    pub fn reachable_from(&self, src: VertexId) -> Vec<bool> {
        self.reach(src, true, |_| true)
    }

    /// Vertices from which `dst` is reachable.
    pub fn reaching(&self, dst: VertexId) -> Vec<bool> {
        self.reach(dst, false, |_| true)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.first_disconnected().is_none()
    }

    /// Some vertex not mutually reachable with vertex 0, if any.
    pub fn first_disconnected(&self) -> Option<VertexId> {
        let fwd = self.reachable_from(0);
        let bwd = self.reaching(0);
        (0..self.n).find(|&v| !(fwd[v] && bwd[v]))
    }

    /// `s` is strongly connected using only edges inside `s` of weight at least `floor`.
    pub fn weight_floor_connected(&self, s: &VertexSubset, floor: f64) -> bool {
        let root = s.members()[0];
        let keep = |e: EdgeId| {
            let edge = &self.edges[e];
            edge.weight >= floor && s.contains(edge.src) && s.contains(edge.dst)
        };
        let fwd = self.reach(root, true, keep);
        let bwd = self.reach(root, false, keep);
        s.members().iter().all(|&v| fwd[v] && bwd[v])
    }

    /// Flip every edge, keeping ids and weights.
    pub fn reverse(&self) -> WeightedDigraph {
        let edges = self.edges.iter().map(|e| Edge { src: e.dst, dst: e.src, weight: e.weight }).collect();
        WeightedDigraph { n: self.n, edges, out_adj: self.in_adj.clone(), in_adj: self.out_adj.clone() }
    }

    /// Same topology with replaced weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<WeightedDigraph> {
        if weights.len() != self.m() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.m(),
                weights.len()
            )));
        }
        let edges = self.edges.iter().zip(weights).map(|(e, &weight)| Edge { weight, ..*e }).collect();
        WeightedDigraph::new(self.n, edges)
    }

    /// Checks that `t` is an arborescence of this graph oriented toward its root.
    pub fn validate_arborescence(&self, t: &Arborescence) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if t.parent_edge.len() != self.n || t.root >= self.n {
            return bad("arborescence does not match the vertex count".into());
        }
        if t.parent_edge[t.root].is_some() {
            return bad(format!("root {} has an out-edge", t.root));
        }
        for v in 0..self.n {
            if v == t.root {
                continue;
            }
            let Some(e) = t.parent_edge[v] else {
                return bad(format!("vertex {v} has no out-edge"));
            };
            if e >= self.m() || self.edges[e].src != v {
                return bad(format!("edge {e} is not an out-edge of vertex {v}"));
            }
            if self.edges[e].dst == v {
                return bad(format!("vertex {v} uses a self-loop"));
            }
        }
        // Following parents from any vertex must reach the root without repeating.
        let mut state = vec![0u8; self.n];
        state[t.root] = 2;
        for v in 0..self.n {
            let mut path = Vec::new();
            let mut x = v;
            while state[x] == 0 {
                state[x] = 1;
                path.push(x);
                x = self.edges[t.parent_edge[x].unwrap()].dst;
            }
            if state[x] == 1 {
                return bad(format!("cycle through vertex {x}"));
            }
            for p in path {
                state[p] = 2;
            }
        }
        Ok(())
    }

    /// Product of the weights of the arborescence edges.
    pub fn arborescence_weight(&self, t: &Arborescence) -> f64 {
        t.edges().map(|e| self.edges[e].weight).product()
    }
}

/// Non-empty set of vertices with O(1) membership.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSubset {
    members: Vec<VertexId>,
    mask: Vec<bool>,
}

impl VertexSubset {
    pub fn new(n: usize, vertices: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let mut mask = vec![false; n];
        for v in vertices {
            if v >= n {
                return Err(Error::InvalidArgument(format!("vertex {v} outside 0..{n}")));
            }
            mask[v] = true;
        }
        let members: Vec<_> = (0..n).filter(|&v| mask[v]).collect();
        if members.is_empty() {
            return Err(Error::InvalidArgument("vertex subset must be non-empty".into()));
        }
        Ok(Self { members, mask })
    }

    pub fn all(n: usize) -> Self {
        Self { members: (0..n).collect(), mask: vec![true; n] }
    }

    pub fn singleton(n: usize, v: VertexId) -> Self {
        let mut mask = vec![false; n];
        mask[v] = true;
        Self { members: vec![v], mask }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    /// Members in increasing order.
    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Position of `v` among the members.
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.members.binary_search(&v).ok()
    }
}

/// Spanning arborescence oriented toward `root`: every other vertex has one out-edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arborescence {
    pub root: VertexId,
    pub parent_edge: Vec<Option<EdgeId>>,
}

impl Arborescence {
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.parent_edge.iter().flatten().copied()
    }

    /// `root=r; v:parent,...` with vertices in increasing order.
    pub fn format_line(&self, g: &WeightedDigraph) -> String {
        let mut line = format!("root={};", self.root);
        let mut first = true;
        for (v, e) in self.parent_edge.iter().enumerate() {
            if let Some(e) = e {
                let sep = if first { " " } else { "," };
                first = false;
                let _ = write!(line, "{sep}{v}:{}", g.edge(*e).dst);
            }
        }
        line
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c3() -> WeightedDigraph {
        WeightedDigraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn degrees() {
        let g = WeightedDigraph::from_triples(2, &[(0, 1, 2.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(g.out_degree(0), 5.0);
        assert_eq!(g.in_degree(1), 2.0);
        assert_eq!(g.out_degree(1), 0.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedDigraph::from_triples(2, &[(0, 2, 1.0)]).is_err());
        assert!(WeightedDigraph::from_triples(2, &[(0, 1, 0.0)]).is_err());
        assert!(WeightedDigraph::from_triples(2, &[(0, 1, f64::NAN)]).is_err());
        assert!(WeightedDigraph::from_triples(0, &[]).is_err());
    }

    #[test]
    fn boundary_of_c3() {
        let g = c3();
        let s = VertexSubset::new(3, [0, 1]).unwrap();
        assert_eq!(g.boundary_edges(&s, Direction::Out), vec![1]);
        assert_eq!(g.boundary_edges(&s, Direction::In), vec![2]);
        assert!(g.boundary_edges(&VertexSubset::all(3), Direction::Out).is_empty());
        let single = VertexSubset::singleton(3, 0);
        assert_eq!(g.boundary_edges(&single, Direction::Out), vec![0]);
    }

    #[test]
    fn eulerian_checks() {
        assert!(c3().is_eulerian(1e-12));
        let g = WeightedDigraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert!(!g.is_eulerian(1e-9));
        let single = WeightedDigraph::new(1, vec![]).unwrap();
        assert!(single.is_eulerian(1e-12));
    }

    #[test]
    fn connectivity() {
        assert!(c3().is_strongly_connected());
        let path = WeightedDigraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(!path.is_strongly_connected());
        let g = WeightedDigraph::from_triples(3, &[(0, 1, 10.0), (1, 0, 10.0), (1, 2, 1.0), (2, 0, 1.0)])
            .unwrap();
        let s = VertexSubset::new(3, [0, 1]).unwrap();
        assert!(g.weight_floor_connected(&s, 5.0));
        assert!(!g.weight_floor_connected(&VertexSubset::all(3), 5.0));
        assert!(g.weight_floor_connected(&VertexSubset::all(3), 1.0));
    }

    #[test]
    fn reverse_keeps_ids() {
        let g = WeightedDigraph::from_triples(2, &[(0, 1, 2.5)]).unwrap();
        let r = g.reverse();
        assert_eq!(*r.edge(0), Edge { src: 1, dst: 0, weight: 2.5 });
        assert_eq!(r.out_edges(1), &[0]);
    }

    #[test]
    fn arborescence_validation() {
        let g = c3();
        let t = Arborescence { root: 0, parent_edge: vec![None, Some(1), Some(2)] };
        assert!(g.validate_arborescence(&t).is_ok());
        assert_eq!(t.format_line(&g), "root=0; 1:2,2:0");
        let cyclic = Arborescence { root: 0, parent_edge: vec![None, Some(1), Some(1)] };
        assert!(g.validate_arborescence(&cyclic).is_err());
        let g2 =
            WeightedDigraph::from_triples(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]).unwrap();
        let loop12 = Arborescence { root: 0, parent_edge: vec![None, Some(2), Some(3)] };
        assert!(g2.validate_arborescence(&loop12).is_err());
        let single = WeightedDigraph::new(1, vec![]).unwrap();
        let t = Arborescence { root: 0, parent_edge: vec![None] };
        assert!(single.validate_arborescence(&t).is_ok());
        assert_eq!(t.format_line(&single), "root=0;");
    }

    fn arb_graph() -> impl Strategy<Value = WeightedDigraph> {
        (1usize..6).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 0.01f64..100.0), 0..20)
                .prop_map(move |t| WeightedDigraph::from_triples(n, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn reverse_is_an_involution(g in arb_graph()) {
            prop_assert_eq!(g.reverse().reverse(), g);
        }

        #[test]
        fn boundary_duality(g in arb_graph(), bits in 1u32..64) {
            let n = g.n();
            let members: Vec<_> = (0..n).filter(|v| bits >> v & 1 == 1).collect();
            prop_assume!(!members.is_empty());
            let s = VertexSubset::new(n, members).unwrap();
            prop_assert_eq!(
                g.boundary_edges(&s, Direction::Out),
                g.reverse().boundary_edges(&s, Direction::In)
            );
        }
    }
}
