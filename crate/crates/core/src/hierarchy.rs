//! Laminar decomposition of an Eulerian graph into clusters joined by
//! progressively lighter cycles.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, VertexId, VertexSubset, WeightedDigraph};

pub type NodeId = usize;

/// Relative tolerance under which two cycle floors count as equal.
pub const FLOOR_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Edges in walk order, starting with the anchor.
    pub edges: Vec<EdgeId>,
    pub anchor: EdgeId,
    /// Minimum edge weight on the cycle.
    pub floor: f64,
}

/// A simple cycle through `e` using only edges of weight at least `w(e) / m`:
/// `e` closed by a shortest path from its head back to its tail.
pub fn find_cycle(g: &WeightedDigraph, e: EdgeId) -> Result<Cycle> {
    let anchor = g.edge(e);
    let threshold = anchor.weight / g.m() as f64 * (1.0 - FLOOR_TIE_TOLERANCE);
    let (from, to) = (anchor.dst, anchor.src);
    let mut via: Vec<Option<EdgeId>> = vec![None; g.n()];
    let mut seen = vec![false; g.n()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &f in g.out_edges(u) {
            let edge = g.edge(f);
            if edge.weight >= threshold && !seen[edge.dst] {
                seen[edge.dst] = true;
                via[edge.dst] = Some(f);
                queue.push_back(edge.dst);
            }
        }
    }
    if !seen[to] {
        return Err(Error::NoCycle { edge: e });
    }
    let mut path = Vec::new();
    let mut x = to;
    while x != from {
        let f = via[x].unwrap();
        path.push(f);
        x = g.edge(f).src;
    }
    path.reverse();
    let mut edges = vec![e];
    edges.extend(path);
    let floor = edges.iter().map(|&f| g.edge(f).weight).fold(f64::INFINITY, f64::min);
    Ok(Cycle { edges, anchor: e, floor })
}

#[derive(Debug, Clone)]
pub struct HierarchyNode {
    pub vertices: VertexSubset,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Edges whose lowest containing node is this one.
    pub jumping_edges: Vec<EdgeId>,
    /// Heaviest jumping edge weight (0 when there is none).
    pub w_max: f64,
    /// Distance to the deepest leaf below.
    pub height: u32,
    pub depth: u32,
    /// Half-open range of this node's vertices in leaf order.
    range: (usize, usize),
}

impl HierarchyNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Laminar family of vertex sets with singleton leaves and root `V`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    nodes: Vec<HierarchyNode>,
    root: NodeId,
    leaf_of: Vec<NodeId>,
    position: Vec<usize>,
    jump_node: Vec<NodeId>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn build_hierarchy(g: &WeightedDigraph) -> Result<Hierarchy> {
    let n = g.n();
    let mut cycles = (0..g.m()).map(|e| find_cycle(g, e)).collect::<Result<Vec<_>>>()?;
    cycles.sort_by(|a, b| b.floor.total_cmp(&a.floor).then(a.anchor.cmp(&b.anchor)));

    let mut vertex_sets: Vec<Vec<VertexId>> = (0..n).map(|v| vec![v]).collect();
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut dsu = Dsu((0..n).collect());
    let mut node_of: Vec<NodeId> = (0..n).collect();

    let mut i = 0;
    while i < cycles.len() {
        let floor = cycles[i].floor;
        let mut j = i;
        while j < cycles.len() && cycles[j].floor >= floor * (1.0 - FLOOR_TIE_TOLERANCE) {
            j += 1;
        }
        let mut touched: Vec<VertexId> = Vec::new();
        for c in &cycles[i..j] {
            for &e in &c.edges {
                touched.push(g.edge(e).src);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let before: Vec<NodeId> = touched.iter().map(|&v| node_of[dsu.find(v)]).collect();
        for c in &cycles[i..j] {
            for &e in &c.edges {
                dsu.union(g.edge(e).src, g.edge(e).dst);
            }
        }
        // Old components grouped by the component they now belong to.
        let mut merged: Vec<(usize, NodeId)> =
            touched.iter().zip(&before).map(|(&v, &old)| (dsu.find(v), old)).collect();
        merged.sort_unstable();
        merged.dedup();
        let mut k = 0;
        while k < merged.len() {
            let comp = merged[k].0;
            let mut l = k;
            while l < merged.len() && merged[l].0 == comp {
                l += 1;
            }
            if l - k >= 2 {
                let mut kids: Vec<NodeId> = merged[k..l].iter().map(|p| p.1).collect();
                kids.sort_by_key(|&c| vertex_sets[c][0]);
                let mut vs: Vec<VertexId> =
                    kids.iter().flat_map(|&c| vertex_sets[c].iter().copied()).collect();
                vs.sort_unstable();
                vertex_sets.push(vs);
                children.push(kids);
                node_of[comp] = vertex_sets.len() - 1;
            } else {
                node_of[comp] = merged[k].1;
            }
            k = l;
        }
        i = j;
    }

    let root_comp = dsu.find(0);
    if let Some(v) = (0..n).find(|&v| dsu.find(v) != root_comp) {
        return Err(Error::NotStronglyConnected { vertex: v });
    }
    let root = node_of[root_comp];
    Hierarchy::assemble(g, vertex_sets, children, root)
}

impl Hierarchy {
    fn assemble(
        g: &WeightedDigraph,
        vertex_sets: Vec<Vec<VertexId>>,
        children: Vec<Vec<NodeId>>,
        root: NodeId,
    ) -> Result<Self> {
        let n = g.n();
        let count = vertex_sets.len();
        let mut parent = vec![None; count];
        for (p, kids) in children.iter().enumerate() {
            for &c in kids {
                parent[c] = Some(p);
            }
        }
        // Depth-first leaf order gives each node a contiguous range.
        let mut position = vec![0; n];
        let mut range = vec![(0, 0); count];
        let mut depth = vec![0u32; count];
        let mut height = vec![0u32; count];
        let mut next = 0;
        let mut stack = vec![(root, false)];
        while let Some((x, done)) = stack.pop() {
            if done {
                range[x].1 = next;
                height[x] = children[x].iter().map(|&c| height[c] + 1).max().unwrap_or(0);
                continue;
            }
            range[x].0 = next;
            if children[x].is_empty() {
                position[vertex_sets[x][0]] = next;
                next += 1;
            }
            stack.push((x, true));
            for &c in children[x].iter().rev() {
                depth[c] = depth[x] + 1;
                stack.push((c, false));
            }
        }
        let leaf_of: Vec<NodeId> = (0..n).collect();
        let mut h =
            Hierarchy { nodes: Vec::with_capacity(count), root, leaf_of, position, jump_node: Vec::new() };
        for x in 0..count {
            h.nodes.push(HierarchyNode {
                vertices: VertexSubset::new(n, vertex_sets[x].iter().copied())?,
                parent: parent[x],
                children: children[x].clone(),
                jumping_edges: Vec::new(),
                w_max: 0.0,
                height: height[x],
                depth: depth[x],
                range: range[x],
            });
        }
        h.jump_node = g.edges().iter().map(|e| h.lca(h.leaf_of[e.src], h.leaf_of[e.dst])).collect();
        for (id, &x) in h.jump_node.iter().enumerate() {
            h.nodes[x].jumping_edges.push(id);
            h.nodes[x].w_max = h.nodes[x].w_max.max(g.edge(id).weight);
        }
        Ok(h)
    }

    fn lca(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while a != b {
            if self.nodes[a].depth >= self.nodes[b].depth {
                a = self.nodes[a].parent.unwrap();
            } else {
                b = self.nodes[b].parent.unwrap();
            }
        }
        a
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[HierarchyNode] {
        &self.nodes
    }

    pub fn node(&self, x: NodeId) -> &HierarchyNode {
        &self.nodes[x]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&self, v: VertexId) -> NodeId {
        self.leaf_of[v]
    }

    pub fn contains(&self, x: NodeId, v: VertexId) -> bool {
        let (lo, hi) = self.nodes[x].range;
        (lo..hi).contains(&self.position[v])
    }

    /// Lowest node containing both endpoints of `e`.
    pub fn jumping_node(&self, e: EdgeId) -> NodeId {
        self.jump_node[e]
    }

    /// The child of `x` containing `v`; `v` must lie in a proper descendant of `x`.
    pub fn child_containing(&self, x: NodeId, v: VertexId) -> NodeId {
        let mut y = self.leaf_of[v];
        while let Some(p) = self.nodes[y].parent {
            if p == x {
                return y;
            }
            y = p;
        }
        panic!("vertex {v} is not below node {x}");
    }

    /// Ancestors of `x` from `x` itself up to the root.
    pub fn ancestors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(x), move |&y| self.nodes[y].parent)
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|x| !x.is_leaf()).count()
    }

    /// Checks laminarity, leaf/root shape, the jumping-edge partition and
    /// weight-floor connectivity of every node.
    pub fn validate(&self, g: &WeightedDigraph) -> std::result::Result<(), String> {
        let n = g.n();
        let m = g.m() as f64;
        let root = &self.nodes[self.root];
        if root.vertices.len() != n {
            return Err("root is not the full vertex set".into());
        }
        for v in 0..n {
            let leaf = &self.nodes[self.leaf_of[v]];
            if !leaf.is_leaf() || leaf.vertices.members() != [v] {
                return Err(format!("leaf of {v} is not the singleton"));
            }
        }
        if self.internal_count() > 2 * n {
            return Err(format!("{} internal nodes exceed 2n", self.internal_count()));
        }
        for (i, a) in self.nodes.iter().enumerate() {
            if !a.is_leaf() && a.children.len() < 2 {
                return Err(format!("internal node {i} has a single child"));
            }
            for b in &self.nodes[i + 1..] {
                let common = a.vertices.members().iter().filter(|&&v| b.vertices.contains(v)).count();
                if common != 0 && common != a.vertices.len() && common != b.vertices.len() {
                    return Err(format!("node {i} overlaps another node without nesting"));
                }
            }
            for &c in &a.children {
                if self.nodes[c].vertices.members().iter().any(|&v| !a.vertices.contains(v)) {
                    return Err(format!("child {c} escapes node {i}"));
                }
            }
            let floor = a.w_max / m * (1.0 - 1e-8);
            if !a.is_leaf() && !g.weight_floor_connected(&a.vertices, floor) {
                return Err(format!("node {i} is not connected at floor {floor}"));
            }
        }
        let mut seen = vec![0u32; g.m()];
        for (x, node) in self.nodes.iter().enumerate() {
            for &e in &node.jumping_edges {
                seen[e] += 1;
                let edge = g.edge(e);
                if !(self.contains(x, edge.src) && self.contains(x, edge.dst)) {
                    return Err(format!("edge {e} is not inside its jumping node"));
                }
                if node.children.iter().any(|&c| self.contains(c, edge.src) && self.contains(c, edge.dst)) {
                    return Err(format!("edge {e} is inside a child of its jumping node"));
                }
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err("jumping edges do not partition the edge set".into());
        }
        Ok(())
    }

    /// Indented text tree: vertex set, `w_max` and jumping-edge count per node.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            let node = &self.nodes[x];
            let members: Vec<String> = node.vertices.members().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                out,
                "{}{{{}}} w_max={} jumping={}",
                "  ".repeat(node.depth as usize),
                members.join(","),
                node.w_max,
                node.jumping_edges.len()
            );
            stack.extend(node.children.iter().rev());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn find_cycle_examples() {
        let c = find_cycle(&fixtures::cycle(3), 0).unwrap();
        assert_eq!(c.edges, vec![0, 1, 2]);

        let g =
            WeightedDigraph::from_triples(3, &[(0, 1, 7.0), (1, 0, 7.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert_eq!(find_cycle(&g, 0).unwrap().edges, vec![0, 1]);

        // Heavy triangle 0-1-2 and light triangle 0-3-4 sharing vertex 0.
        let g = WeightedDigraph::from_triples(
            5,
            &[(0, 1, 10.0), (1, 2, 10.0), (2, 0, 10.0), (0, 3, 1.0), (3, 4, 1.0), (4, 0, 1.0)],
        )
        .unwrap();
        let c = find_cycle(&g, 1).unwrap();
        assert_eq!(c.edges, vec![1, 2, 0]);
        assert_eq!(c.floor, 10.0);

        let path = WeightedDigraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(find_cycle(&path, 0), Err(Error::NoCycle { edge: 0 })));
    }

    #[test]
    fn c3_hierarchy() {
        let g = fixtures::cycle(3);
        let h = build_hierarchy(&g).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.node(h.root()).vertices.members(), &[0, 1, 2]);
        assert_eq!(h.node(h.root()).jumping_edges, vec![0, 1, 2]);
        for e in 0..3 {
            assert_eq!(h.jumping_node(e), h.root());
        }
        h.validate(&g).unwrap();
    }

    #[test]
    fn barbell_hierarchy() {
        let g = fixtures::barbell(1000.0);
        let h = build_hierarchy(&g).unwrap();
        assert_eq!(h.internal_count(), 2);
        let root = h.node(h.root());
        assert_eq!(root.jumping_edges, vec![2, 3]);
        assert_eq!(root.w_max, 1.0);
        let ab = h.jumping_node(0);
        assert_eq!(h.node(ab).vertices.members(), &[0, 1]);
        assert_eq!(h.node(ab).w_max, 1000.0);
        assert_eq!(h.jumping_node(2), h.root());
        h.validate(&g).unwrap();
        assert_eq!(
            h.export_text(),
            "{0,1,2} w_max=1 jumping=2\n  {0,1} w_max=1000 jumping=2\n    {0} w_max=0 jumping=0\n    {1} w_max=0 jumping=0\n  {2} w_max=0 jumping=0\n"
        );
    }

    #[test]
    fn k3_ties_collapse() {
        let g = fixtures::bidirected_complete(3);
        let h = build_hierarchy(&g).unwrap();
        assert_eq!(h.internal_count(), 1);
        assert_eq!(h.node(h.root()).jumping_edges.len(), 6);
        h.validate(&g).unwrap();
    }

    #[test]
    fn self_loops_jump_at_leaves() {
        let g = WeightedDigraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 1.0), (0, 0, 5.0)]).unwrap();
        let h = build_hierarchy(&g).unwrap();
        assert_eq!(h.jumping_node(2), h.leaf(0));
        h.validate(&g).unwrap();
    }

    #[test]
    fn random_eulerian_invariants() {
        for seed in 0..40 {
            let n = 2 + (seed as usize * 7) % 30;
            let g = fixtures::random_eulerian(n, n, seed);
            let h = build_hierarchy(&g).unwrap();
            h.validate(&g).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            for e in 0..g.m() {
                let c = find_cycle(&g, e).unwrap();
                assert!(c.edges.contains(&e));
                for w in c.edges.windows(2) {
                    assert_eq!(g.edge(w[0]).dst, g.edge(w[1]).src);
                }
                assert_eq!(g.edge(*c.edges.last().unwrap()).dst, g.edge(c.edges[0]).src);
                let floor = g.edge(e).weight / g.m() as f64 * (1.0 - 1e-9);
                assert!(c.edges.iter().all(|&f| g.edge(f).weight >= floor));
            }
        }
    }
}
