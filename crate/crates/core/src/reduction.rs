//! Reduction of an arbitrary digraph and root to a strongly connected Eulerian graph
//! with the same distribution of arborescences rooted at that root.

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, VertexId, WeightedDigraph};
use crate::oracle::{self, ExactWeights};
use crate::plan::Variate;
use crate::walk::{stationary_distribution, StationaryDistribution};

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub root: VertexId,
    /// Original edges keep their ids; patch edges follow them.
    pub eulerian_graph: WeightedDigraph,
    pub patch_edges: Vec<EdgeId>,
    /// `w''(e) / w(e)` for every edge of the Eulerian graph.
    pub scale_record: Vec<f64>,
    pub patched_stationary: StationaryDistribution,
}

impl ReductionResult {
    pub fn original_edges(&self) -> usize {
        self.eulerian_graph.m() - self.patch_edges.len()
    }
}

/// Law of the root of a weight-proportional arborescence: the total weight of
/// arborescences rooted at `r`, which is `pi(r) / deg(r)` up to normalization.
pub fn root_law(g: &WeightedDigraph) -> Result<StationaryDistribution> {
    if let Some(vertex) = g.first_disconnected() {
        return Err(Error::NotStronglyConnected { vertex });
    }
    let pi = stationary_distribution(g)?;
    let raw: Vec<f64> = (0..g.n()).map(|v| pi.get(v) / g.out_degree(v).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = raw.iter().sum();
    Ok(StationaryDistribution::new(raw.into_iter().map(|x| x / total).collect()))
}

pub fn sample_root(g: &WeightedDigraph, x: &Variate) -> Result<VertexId> {
    Ok(root_law(g)?.sample(x))
}

/// Adds a unit-weight edge `r -> v` for every `v != r` lacking one.
pub fn patch(g: &WeightedDigraph, r: VertexId) -> Result<(WeightedDigraph, Vec<EdgeId>)> {
    if r >= g.n() {
        return Err(Error::InvalidArgument(format!("root {r} outside 0..{}", g.n())));
    }
    let mut has = vec![false; g.n()];
    for &e in g.out_edges(r) {
        has[g.edge(e).dst] = true;
    }
    let mut edges = g.edges().to_vec();
    let mut patches = Vec::new();
    for v in (0..g.n()).filter(|&v| v != r && !has[v]) {
        patches.push(edges.len());
        edges.push(Edge { src: r, dst: v, weight: 1.0 });
    }
    let patched = WeightedDigraph::new(g.n(), edges)?;
    let reach = patched.reaching(r);
    if let Some(vertex) = (0..g.n()).find(|&v| !reach[v]) {
        return Err(Error::UnreachableVertex { vertex, root: r });
    }
    Ok((patched, patches))
}

pub fn reduce(g: &WeightedDigraph, r: VertexId) -> Result<ReductionResult> {
    let (patched, patch_edges) = patch(g, r)?;
    let pi = stationary_distribution(&patched)?;
    let factor: Vec<f64> = (0..g.n()).map(|v| pi.get(v) / patched.out_degree(v)).collect();
    let scale_record: Vec<f64> = patched.edges().iter().map(|e| factor[e.src]).collect();
    let weights: Vec<f64> = patched.edges().iter().zip(&scale_record).map(|(e, s)| e.weight * s).collect();
    Ok(ReductionResult {
        root: r,
        eulerian_graph: patched.with_weights(&weights)?,
        patch_edges,
        scale_record,
        patched_stationary: pi,
    })
}

/// Exact counterpart of [`reduce`]: weights of the Eulerian graph as rationals.
pub fn exact_reduce(g: &WeightedDigraph, w: &ExactWeights, r: VertexId) -> Result<Vec<BigRational>> {
    let (patched, patch_edges) = patch(g, r)?;
    let mut exact: Vec<BigRational> = w.values().to_vec();
    exact.extend(patch_edges.iter().map(|_| BigRational::one()));
    let pw = ExactWeights::new(exact.clone());
    let pi = oracle::exact_stationary(&patched, &pw)?;
    let mut deg = vec![BigRational::from_integer(0.into()); g.n()];
    for (e, x) in patched.edges().iter().zip(&exact) {
        deg[e.src] += x;
    }
    Ok(patched.edges().iter().zip(exact).map(|(e, x)| x * &pi[e.src] / &deg[e.src]).collect())
}

#[derive(Debug, Clone)]
pub struct PreservationReport {
    /// `w_G(T) / w_G''(T)` for every `r`-rooted arborescence, in catalog order.
    pub ratios: Vec<BigRational>,
    pub constant: bool,
    /// Arborescences of the Eulerian graph rooted at `r` that use a patch edge.
    pub patch_edge_trees: usize,
    /// Largest relative gap between the floating reduction and the exact one.
    pub float_deviation: f64,
}

/// Verifies exactly that the reduction rescales every `r`-rooted arborescence
/// weight by one common factor.
pub fn arborescence_distribution_preserved_check(
    g: &WeightedDigraph,
    w: &ExactWeights,
    result: &ReductionResult,
) -> Result<PreservationReport> {
    let r = result.root;
    let exact = exact_reduce(g, w, r)?;
    let ew = ExactWeights::new(exact.clone());
    let before = oracle::enumerate_arborescences(g, w, r)?;
    let after = oracle::enumerate_arborescences(&result.eulerian_graph, &ew, r)?;
    let patch_edge_trees =
        after.entries.iter().filter(|t| t.tree.edges().any(|e| result.patch_edges.contains(&e))).count();
    let ratios: Vec<BigRational> = before
        .entries
        .iter()
        .map(|t| {
            let denom: BigRational = t.tree.edges().map(|e| exact[e].clone()).product();
            &t.weight / denom
        })
        .collect();
    let constant = ratios.windows(2).all(|p| p[0] == p[1]);
    let float_deviation = exact
        .iter()
        .zip(result.eulerian_graph.edges())
        .map(|(x, e)| {
            let x = oracle::to_f64(x);
            (x - e.weight).abs() / x
        })
        .fold(0.0, f64::max);
    Ok(PreservationReport { ratios, constant, patch_edge_trees, float_deviation })
}
