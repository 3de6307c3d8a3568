//! Random-walk quantities: stationary law, exit laws, conditioned exit laws,
//! Schur complements, time reversal, and Monte Carlo visit counts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Direction, Edge, EdgeId, VertexId, VertexSubset, WeightedDigraph};
use crate::linalg;
use crate::plan::Variate;

const NO_ROW: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StationaryDistribution {
    pub fn new(pi: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = pi
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { pi, cumulative }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.pi[v]
    }

    pub fn sample(&self, x: &Variate) -> VertexId {
        x.bucket(&self.cumulative)
    }
}

/// Stationary distribution of the walk with `P(u,v) = w(u,v) / deg(u)`.
pub fn stationary_distribution(g: &WeightedDigraph) -> Result<StationaryDistribution> {
    if !g.is_strongly_connected() {
        return Err(Error::SingularSystem { pivot: 0.0 });
    }
    let n = g.n();
    // Rows of P^T - I, with the last equation replaced by sum(pi) = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        a[(u, u)] -= 1.0;
        let deg = g.out_degree(u);
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            a[(edge.dst, u)] += edge.weight / deg;
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DMatrix::<f64>::zeros(n, 1);
    b[n - 1] = 1.0;
    let x = linalg::factor(a)?.solve(&b)?;
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(StationaryDistribution::new(pi))
}

/// Exit law of a cluster from each of its vertices.
#[derive(Debug, Clone)]
pub struct ExitMatrix {
    pub members: Vec<VertexId>,
    pub exits: Vec<EdgeId>,
    /// `probs[(i, j)]`: walk from `members[i]` leaves through `exits[j]`.
    pub probs: DMatrix<f64>,
}

/// Dense `I - P` restricted to `s`, plus the row index of every vertex.
fn killed_system(g: &WeightedDigraph, s: &VertexSubset) -> DMatrix<f64> {
    let k = s.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    for (i, &u) in s.members().iter().enumerate() {
        let deg = g.out_degree(u);
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            if let Some(j) = s.index_of(edge.dst) {
                a[(i, j)] -= edge.weight / deg;
            }
        }
    }
    a
}

/// Every vertex of `s` can leave `s`; reports one that cannot.
fn check_escapable(g: &WeightedDigraph, s: &VertexSubset) -> Result<()> {
    let mut can = vec![false; g.n()];
    let mut stack = Vec::new();
    for &u in s.members() {
        if g.out_edges(u).iter().any(|&e| !s.contains(g.edge(e).dst)) {
            can[u] = true;
            stack.push(u);
        }
    }
    while let Some(x) = stack.pop() {
        for &e in g.in_edges(x) {
            let y = g.edge(e).src;
            if s.contains(y) && !can[y] {
                can[y] = true;
                stack.push(y);
            }
        }
    }
    match s.members().iter().find(|&&u| !can[u]) {
        Some(&vertex) => Err(Error::TrappedCluster { vertex }),
        None => Ok(()),
    }
}

pub fn exit_matrix(g: &WeightedDigraph, s: &VertexSubset) -> Result<ExitMatrix> {
    check_escapable(g, s)?;
    let exits = g.boundary_edges(s, Direction::Out);
    let mut b = DMatrix::<f64>::zeros(s.len(), exits.len());
    for (j, &e) in exits.iter().enumerate() {
        let edge = g.edge(e);
        let i = s.index_of(edge.src).unwrap();
        b[(i, j)] = edge.weight / g.out_degree(edge.src);
    }
    let mut probs = linalg::factor(killed_system(g, s))?.solve(&b)?;
    for mut row in probs.row_iter_mut() {
        row.iter_mut().for_each(|p| *p = p.max(0.0));
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    Ok(ExitMatrix { members: s.members().to_vec(), exits, probs })
}

/// Law of the edge through which a walk from `v` first leaves `s`, over the
/// out-boundary of `s` in increasing edge-id order.
pub fn exit_distribution(g: &WeightedDigraph, s: &VertexSubset, v: VertexId) -> Result<Vec<(EdgeId, f64)>> {
    let i =
        s.index_of(v).ok_or_else(|| Error::InvalidArgument(format!("vertex {v} is not in the cluster")))?;
    let em = exit_matrix(g, s)?;
    Ok(em.exits.iter().enumerate().map(|(j, &e)| (e, em.probs[(i, j)])).collect())
}

/// Probability, from each vertex of `s`, that the walk leaves `s` through `e_end`.
pub fn harmonic_weights(g: &WeightedDigraph, s: &VertexSubset, e_end: EdgeId) -> Result<Vec<f64>> {
    let edge = g.edge(e_end);
    if !s.contains(edge.src) || s.contains(edge.dst) {
        return Err(Error::InvalidArgument(format!("edge {e_end} does not leave the cluster")));
    }
    check_escapable(g, s)?;
    let mut b = DMatrix::<f64>::zeros(s.len(), 1);
    b[s.index_of(edge.src).unwrap()] = edge.weight / g.out_degree(edge.src);
    let h = linalg::factor(killed_system(g, s))?.solve(&b)?;
    Ok(h.iter().map(|x| x.max(0.0)).collect())
}

#[derive(Debug, Clone)]
struct Row {
    edges: Vec<EdgeId>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

/// For each vertex of a cluster, the law of the edge by which the walk leaves
/// the child cluster containing it, optionally conditioned on leaving the
/// cluster through a given edge.
#[derive(Debug, Clone)]
pub struct ExitTable {
    members: Vec<VertexId>,
    conditioning: Option<EdgeId>,
    row_of: Vec<u32>,
    rows: Vec<Row>,
    harmonic: Option<Vec<f64>>,
}

impl ExitTable {
    /// Builds the table from the exit matrices of the children of `s`.
    ///
    /// With a conditioning edge the child-exit law is reweighted by the
    /// probability of subsequently leaving `s` through it.
    pub fn assemble(
        g: &WeightedDigraph,
        s: &VertexSubset,
        children: &[&ExitMatrix],
        e_end: Option<EdgeId>,
    ) -> Result<Self> {
        let harmonic = match e_end {
            Some(e) => Some(harmonic_weights(g, s, e)?),
            None => None,
        };
        let boost = |f: EdgeId| -> f64 {
            match (e_end, &harmonic) {
                (Some(end), Some(h)) => {
                    if f == end {
                        1.0
                    } else {
                        s.index_of(g.edge(f).dst).map_or(0.0, |j| h[j])
                    }
                }
                _ => 1.0,
            }
        };
        let mut row_of = vec![NO_ROW; g.n()];
        let mut rows = Vec::with_capacity(s.len());
        for child in children {
            let boosts: Vec<f64> = child.exits.iter().map(|&f| boost(f)).collect();
            for (i, &u) in child.members.iter().enumerate() {
                if !s.contains(u) {
                    return Err(Error::InvalidArgument(format!("child vertex {u} is outside the cluster")));
                }
                let mut edges = Vec::new();
                let mut probs = Vec::new();
                for (j, &f) in child.exits.iter().enumerate() {
                    let p = child.probs[(i, j)] * boosts[j];
                    if p > 0.0 {
                        edges.push(f);
                        probs.push(p);
                    }
                }
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                let mut acc = 0.0;
                let cumulative = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                row_of[u] = rows.len() as u32;
                rows.push(Row { edges, probs, cumulative });
            }
        }
        if rows.len() != s.len() {
            return Err(Error::InvalidArgument("children do not partition the cluster".into()));
        }
        Ok(Self { members: s.members().to_vec(), conditioning: e_end, row_of, rows, harmonic })
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn conditioning(&self) -> Option<EdgeId> {
        self.conditioning
    }

    /// Probability of leaving the cluster through the conditioning edge, per member.
    pub fn harmonic(&self) -> Option<&[f64]> {
        self.harmonic.as_deref()
    }

    fn row(&self, u: VertexId) -> Result<&Row> {
        let idx = *self.row_of.get(u).unwrap_or(&NO_ROW);
        if idx == NO_ROW {
            return Err(Error::InvalidArgument(format!("vertex {u} is not in the cluster")));
        }
        let row = &self.rows[idx as usize];
        if row.edges.is_empty() {
            return Err(Error::ZeroConditioning { vertex: u });
        }
        Ok(row)
    }

    pub fn distribution(&self, u: VertexId) -> Result<Vec<(EdgeId, f64)>> {
        let row = self.row(u)?;
        Ok(row.edges.iter().copied().zip(row.probs.iter().copied()).collect())
    }

    /// The child-exit edge selected by variate `x` at vertex `u`.
    pub fn next_edge(&self, u: VertexId, x: &Variate) -> Result<EdgeId> {
        let row = self.row(u)?;
        Ok(row.edges[x.bucket(&row.cumulative)])
    }
}

/// Exit table of `s` with children given by the partition `parts`.
pub fn conditioned_exit_table(
    g: &WeightedDigraph,
    s: &VertexSubset,
    parts: &[VertexSubset],
    e_end: Option<EdgeId>,
) -> Result<ExitTable> {
    let matrices = parts.iter().map(|p| exit_matrix(g, p)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ExitMatrix> = matrices.iter().collect();
    ExitTable::assemble(g, s, &refs, e_end)
}

/// Graph on `s` whose walk is the original walk observed only while in `s`.
#[derive(Debug, Clone)]
pub struct SchurComplement {
    pub graph: WeightedDigraph,
    /// Original vertex of each local vertex.
    pub vertex_map: Vec<VertexId>,
    /// Original edge of each induced edge; return edges follow them.
    pub induced_edges: Vec<EdgeId>,
}

pub fn schur_complement(g: &WeightedDigraph, s: &VertexSubset) -> Result<SchurComplement> {
    let n = g.n();
    let outside: Vec<VertexId> = (0..n).filter(|&v| !s.contains(v)).collect();
    let mut edges = Vec::new();
    let mut induced_edges = Vec::new();
    for (id, e) in g.edges().iter().enumerate() {
        if s.contains(e.src) && s.contains(e.dst) {
            edges.push(Edge {
                src: s.index_of(e.src).unwrap(),
                dst: s.index_of(e.dst).unwrap(),
                weight: e.weight,
            });
            induced_edges.push(id);
        }
    }
    if !outside.is_empty() {
        let rest = VertexSubset::new(n, outside.iter().copied())?;
        check_escapable(g, &rest).map_err(|_| Error::SingularSystem { pivot: 0.0 })?;
        let k = s.len();
        let mut p_out_in = DMatrix::<f64>::zeros(rest.len(), k);
        for (i, &x) in rest.members().iter().enumerate() {
            let deg = g.out_degree(x);
            for &e in g.out_edges(x) {
                let edge = g.edge(e);
                if let Some(j) = s.index_of(edge.dst) {
                    p_out_in[(i, j)] += edge.weight / deg;
                }
            }
        }
        // F[(x, v)]: walk from outside vertex x first enters s at v.
        let f = linalg::factor(killed_system(g, &rest))?.solve(&p_out_in)?;
        for (a, &u) in s.members().iter().enumerate() {
            let mut ret = vec![0.0; k];
            for &e in g.out_edges(u) {
                let edge = g.edge(e);
                if let Some(i) = rest.index_of(edge.dst) {
                    for (b, r) in ret.iter_mut().enumerate() {
                        *r += edge.weight * f[(i, b)].max(0.0);
                    }
                }
            }
            for (b, &weight) in ret.iter().enumerate() {
                if weight > 0.0 {
                    edges.push(Edge { src: a, dst: b, weight });
                }
            }
        }
    }
    Ok(SchurComplement {
        graph: WeightedDigraph::new(s.len(), edges)?,
        vertex_map: s.members().to_vec(),
        induced_edges,
    })
}

/// Time reversal: edge `u -> v` becomes `v -> u` with weight `pi(u) w(u,v) / deg(u)`.
/// Edge ids are preserved. For Eulerian graphs this is the plain edge flip up
/// to a global scale.
pub fn time_reversal(g: &WeightedDigraph) -> Result<WeightedDigraph> {
    let pi = stationary_distribution(g)?;
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge { src: e.dst, dst: e.src, weight: pi.get(e.src) * e.weight / g.out_degree(e.src) })
        .collect();
    WeightedDigraph::new(g.n(), edges)
}

/// Per-vertex cumulative weights for fast Monte Carlo stepping.
#[derive(Debug, Clone)]
pub struct StepSampler {
    cumulative: Vec<Vec<f64>>,
    edges: Vec<Vec<EdgeId>>,
}

impl StepSampler {
    pub fn new(g: &WeightedDigraph) -> Self {
        let mut cumulative = Vec::with_capacity(g.n());
        let mut edges = Vec::with_capacity(g.n());
        for u in 0..g.n() {
            let mut acc = 0.0;
            cumulative.push(
                g.out_edges(u)
                    .iter()
                    .map(|&e| {
                        acc += g.edge(e).weight;
                        acc
                    })
                    .collect(),
            );
            edges.push(g.out_edges(u).to_vec());
        }
        Self { cumulative, edges }
    }

    /// Out-edge of `u` selected by a uniform `x` in [0, 1).
    #[inline]
    pub fn step(&self, u: VertexId, x: f64) -> EdgeId {
        let cum = &self.cumulative[u];
        let target = x * cum[cum.len() - 1];
        let i = cum.partition_point(|&c| c <= target).min(cum.len() - 1);
        self.edges[u][i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Visits to every vertex during times `1..=tau`, where `tau >= 1` is the first
/// time the walk from `s` is at `t`, averaged over `trials` walks.
pub fn visit_counts<R: Rng>(
    g: &WeightedDigraph,
    s: VertexId,
    t: VertexId,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<VisitEstimate>> {
    if !g.reaching(t).iter().all(|&b| b) || trials == 0 {
        return Err(Error::InvalidArgument(format!("walk to {t} is not almost surely finite")));
    }
    let n = g.n();
    let sampler = StepSampler::new(g);
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut counts = vec![0u64; n];
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut u = s;
        loop {
            u = g.edge(sampler.step(u, rng.gen::<f64>())).dst;
            counts[u] += 1;
            if u == t {
                break;
            }
        }
        for v in 0..n {
            let c = counts[v] as f64;
            sum[v] += c;
            sum_sq[v] += c * c;
        }
    }
    let k = trials as f64;
    Ok((0..n)
        .map(|v| {
            let mean = sum[v] / k;
            let var = (sum_sq[v] / k - mean * mean).max(0.0) * k / (k - 1.0).max(1.0);
            VisitEstimate { mean, std_error: (var / k).sqrt() }
        })
        .collect())
}

/// Monte Carlo estimate of the expected visits to `v` by a walk from `s` stopped at `t`.
pub fn visit_count(
    g: &WeightedDigraph,
    v: VertexId,
    s: VertexId,
    t: VertexId,
    trials: usize,
    seed: u64,
) -> Result<VisitEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(visit_counts(g, s, t, trials, &mut rng)?[v])
}

/// Empirical exit law from `v` by direct simulation, over the boundary in id order.
pub fn simulate_exit_distribution<R: Rng>(
    g: &WeightedDigraph,
    s: &VertexSubset,
    v: VertexId,
    walks: usize,
    rng: &mut R,
) -> Vec<(EdgeId, f64)> {
    let exits = g.boundary_edges(s, Direction::Out);
    let sampler = StepSampler::new(g);
    let mut hits = vec![0u64; g.m()];
    for _ in 0..walks {
        let mut u = v;
        loop {
            let e = sampler.step(u, rng.gen::<f64>());
            u = g.edge(e).dst;
            if !s.contains(u) {
                hits[e] += 1;
                break;
            }
        }
    }
    exits.into_iter().map(|e| (e, hits[e] as f64 / walks as f64)).collect()
}
