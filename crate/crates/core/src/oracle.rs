//! Exact ground truth: arborescence enumeration, matrix-tree counting and
//! goodness-of-fit statistics for sampler output.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::graph::{Arborescence, EdgeId, VertexId, WeightedDigraph};

/// Largest vertex count accepted by [`enumerate_arborescences`].
pub const ENUMERATION_LIMIT: usize = 8;

/// Exact edge weights, indexed by edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactWeights(Vec<BigRational>);

impl ExactWeights {
    pub fn new(values: Vec<BigRational>) -> Self {
        Self(values)
    }

    /// The exact binary values of the floating weights.
    pub fn from_graph(g: &WeightedDigraph) -> Self {
        Self(g.edges().iter().map(|e| BigRational::from_f64(e.weight).expect("weights are finite")).collect())
    }

    pub fn values(&self) -> &[BigRational] {
        &self.0
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub tree: Arborescence,
    pub weight: BigRational,
}

/// All arborescences rooted at one vertex, in canonical (parent-edge vector) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArborescenceCatalog {
    pub root: VertexId,
    pub entries: Vec<CatalogEntry>,
    pub total: BigRational,
}

impl ArborescenceCatalog {
    /// One line per tree: exact weight, a tab, then the tree line.
    pub fn export(&self, g: &WeightedDigraph) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let _ = writeln!(out, "{}\t{}", entry.weight, entry.tree.format_line(g));
        }
        out
    }
}

pub fn enumerate_arborescences(
    g: &WeightedDigraph,
    w: &ExactWeights,
    r: VertexId,
) -> Result<ArborescenceCatalog> {
    let n = g.n();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { n, limit: ENUMERATION_LIMIT });
    }
    if r >= n {
        return Err(Error::InvalidArgument(format!("root {r} outside 0..{n}")));
    }
    let choices: Vec<Vec<EdgeId>> = (0..n)
        .map(|v| {
            if v == r {
                Vec::new()
            } else {
                g.out_edges(v).iter().copied().filter(|&e| g.edge(e).dst != v).collect()
            }
        })
        .collect();
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut entries = Vec::new();
    enumerate_from(g, w, r, 0, &choices, &mut parent, &mut entries);
    entries.sort_by(|a: &CatalogEntry, b| a.tree.cmp(&b.tree));
    let total = entries.iter().map(|e| e.weight.clone()).sum();
    Ok(ArborescenceCatalog { root: r, entries, total })
}

/// Assigns out-edges to vertices in order, pruning as soon as a cycle closes.
fn enumerate_from(
    g: &WeightedDigraph,
    w: &ExactWeights,
    r: VertexId,
    v: VertexId,
    choices: &[Vec<EdgeId>],
    parent: &mut Vec<Option<EdgeId>>,
    out: &mut Vec<CatalogEntry>,
) {
    let n = g.n();
    if v == n {
        let tree = Arborescence { root: r, parent_edge: parent.clone() };
        let weight = tree.edges().map(|e| w.0[e].clone()).product();
        out.push(CatalogEntry { tree, weight });
        return;
    }
    if v == r {
        enumerate_from(g, w, r, v + 1, choices, parent, out);
        return;
    }
    for &e in &choices[v] {
        parent[v] = Some(e);
        // Walk up from v; the assignment is acyclic unless it returns to v.
        let mut x = g.edge(e).dst;
        let mut steps = 0;
        let mut cyclic = false;
        while let Some(pe) = parent[x] {
            if x == v || steps > n {
                cyclic = true;
                break;
            }
            x = g.edge(pe).dst;
            steps += 1;
        }
        if x == v {
            cyclic = true;
        }
        if !cyclic {
            enumerate_from(g, w, r, v + 1, choices, parent, out);
        }
        parent[v] = None;
    }
}

/// Catalogs for every root.
pub fn enumerate_all(g: &WeightedDigraph, w: &ExactWeights) -> Result<Vec<ArborescenceCatalog>> {
    (0..g.n()).map(|r| enumerate_arborescences(g, w, r)).collect()
}

fn lcm_of_denominators(row: &[BigRational]) -> BigInt {
    row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Determinant by fraction-free elimination.
fn bareiss(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Total weight of arborescences rooted at `r`: the minor of the out-degree
/// Laplacian `D_out - A` with row and column `r` removed.
pub fn count_arborescences(g: &WeightedDigraph, w: &ExactWeights, r: VertexId) -> BigRational {
    let n = g.n();
    let idx: Vec<VertexId> = (0..n).filter(|&v| v != r).collect();
    let pos = |v: VertexId| idx.binary_search(&v).ok();
    let mut lap = vec![vec![BigRational::zero(); idx.len()]; idx.len()];
    for (e, x) in g.edges().iter().zip(&w.0) {
        if e.src == e.dst {
            continue;
        }
        if let Some(i) = pos(e.src) {
            lap[i][i] += x;
            if let Some(j) = pos(e.dst) {
                lap[i][j] -= x;
            }
        }
    }
    let mut scale = BigInt::one();
    let ints: Vec<Vec<BigInt>> = lap
        .into_iter()
        .map(|row| {
            let l = lcm_of_denominators(&row);
            scale *= &l;
            row.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    BigRational::new(bareiss(ints), scale)
}

/// Solves `a x = b` exactly by Gauss-Jordan elimination.
#[allow(clippy::needless_range_loop)]
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(p, k);
        b.swap(p, k);
        let pivot = a[k][k].clone();
        for x in &mut a[k][k..] {
            *x = &*x / &pivot;
        }
        b[k] = &b[k] / &pivot;
        for i in 0..n {
            if i != k && !a[i][k].is_zero() {
                let f = a[i][k].clone();
                for j in k..n {
                    let v = &a[k][j] * &f;
                    a[i][j] -= v;
                }
                let v = &b[k] * &f;
                b[i] -= v;
            }
        }
    }
    Some(b)
}

/// Stationary distribution in exact arithmetic.
pub fn exact_stationary(g: &WeightedDigraph, w: &ExactWeights) -> Result<Vec<BigRational>> {
    let n = g.n();
    if !g.is_strongly_connected() {
        return Err(Error::SingularSystem { pivot: 0.0 });
    }
    let mut deg = vec![BigRational::zero(); n];
    for (e, x) in g.edges().iter().zip(&w.0) {
        deg[e.src] += x;
    }
    let mut a = vec![vec![BigRational::zero(); n]; n];
    for (u, row) in a.iter_mut().enumerate() {
        row[u] -= BigRational::one();
    }
    for (e, x) in g.edges().iter().zip(&w.0) {
        a[e.dst][e.src] += x / &deg[e.src];
    }
    a[n - 1] = vec![BigRational::one(); n];
    let mut b = vec![BigRational::zero(); n];
    b[n - 1] = BigRational::one();
    solve_exact(a, b).ok_or(Error::SingularSystem { pivot: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeCount {
    pub tree: String,
    pub edges: Vec<EdgeId>,
    pub count: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub samples: u64,
    pub tv: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub chi_square_p: f64,
    pub per_tree_counts: Vec<TreeCount>,
}

/// Compares samples with the weight-proportional law over the given catalogs
/// (one per root, or a single one for a fixed root).
pub fn distribution_report(
    g: &WeightedDigraph,
    samples: &[Arborescence],
    catalogs: &[ArborescenceCatalog],
) -> Result<DistributionReport> {
    let total: BigRational = catalogs.iter().map(|c| c.total.clone()).sum();
    let mut index: HashMap<&Arborescence, usize> = HashMap::new();
    let mut per_tree_counts = Vec::new();
    for entry in catalogs.iter().flat_map(|c| &c.entries) {
        index.insert(&entry.tree, per_tree_counts.len());
        per_tree_counts.push(TreeCount {
            tree: entry.tree.format_line(g),
            edges: entry.tree.edges().collect(),
            count: 0,
            expected: to_f64(&(&entry.weight / &total)),
        });
    }
    for s in samples {
        match index.get(s) {
            Some(&i) => per_tree_counts[i].count += 1,
            None => {
                let tree = if s.parent_edge.len() == g.n() { s.format_line(g) } else { format!("{s:?}") };
                return Err(Error::UnknownTree { tree });
            }
        }
    }
    let n = samples.len() as f64;
    let tv = if samples.is_empty() {
        0.0
    } else {
        per_tree_counts.iter().map(|t| (t.count as f64 / n - t.expected).abs()).sum::<f64>() / 2.0
    };
    let (chi_square, degrees_of_freedom) = chi_square(&per_tree_counts, n);
    let chi_square_p = if degrees_of_freedom == 0 {
        1.0
    } else {
        ChiSquared::new(degrees_of_freedom as f64).map(|d| d.sf(chi_square)).unwrap_or(0.0)
    };
    Ok(DistributionReport {
        samples: samples.len() as u64,
        tv,
        chi_square,
        degrees_of_freedom,
        chi_square_p,
        per_tree_counts,
    })
}

/// Pearson statistic with bins of expected count below 5 pooled together.
fn chi_square(counts: &[TreeCount], n: f64) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for t in counts {
        let exp = t.expected * n;
        if exp < 5.0 {
            pooled_obs += t.count as f64;
            pooled_exp += exp;
        } else {
            bins.push((t.count as f64, exp));
        }
    }
    if pooled_exp > 0.0 {
        if pooled_exp >= 5.0 || bins.is_empty() {
            bins.push((pooled_obs, pooled_exp));
        } else {
            let smallest = (0..bins.len()).min_by(|&a, &b| bins[a].1.total_cmp(&bins[b].1)).unwrap();
            bins[smallest].0 += pooled_obs;
            bins[smallest].1 += pooled_exp;
        }
    }
    let stat = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, bins.len().saturating_sub(1))
}

/// Total variation distance between the empirical laws of two sample sets.
pub fn empirical_tv(a: &[Arborescence], b: &[Arborescence]) -> f64 {
    let mut freq: HashMap<&Arborescence, (f64, f64)> = HashMap::new();
    for t in a {
        freq.entry(t).or_default().0 += 1.0 / a.len() as f64;
    }
    for t in b {
        freq.entry(t).or_default().1 += 1.0 / b.len() as f64;
    }
    freq.values().map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

/// Bound on the probability that `samples` exact draws over `outcomes`
/// categories have empirical TV distance at least `eps` from the truth.
pub fn tv_tail_bound(outcomes: usize, samples: u64, eps: f64) -> f64 {
    let log = outcomes as f64 * std::f64::consts::LN_2 - 2.0 * samples as f64 * eps * eps;
    log.exp().min(1.0)
}

/// Rational rendered exactly: an integer, a terminating decimal, or `p/q`.
pub fn format_rational(x: &BigRational) -> String {
    if x.is_integer() {
        return x.numer().to_string();
    }
    let mut d = x.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut a, mut b) = (0u32, 0u32);
    while d.is_even() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", x.numer(), x.denom());
    }
    let k = a.max(b) as usize;
    let scaled = (x * BigRational::from_integer(BigInt::from(10).pow(k as u32))).to_integer();
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = k + 1);
    let (int, frac) = digits.split_at(digits.len() - k);
    let sign = if scaled.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{frac}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn int(x: i64) -> BigRational {
        BigRational::from_integer(x.into())
    }

    #[test]
    fn enumeration_examples() {
        let g = fixtures::cycle(3);
        let cat = enumerate_arborescences(&g, &ExactWeights::from_graph(&g), 0).unwrap();
        assert_eq!(cat.entries.len(), 1);
        assert_eq!(cat.total, int(1));

        let k3 = fixtures::bidirected_complete(3);
        let cat = enumerate_arborescences(&k3, &ExactWeights::from_graph(&k3), 0).unwrap();
        let lines: Vec<_> = cat.entries.iter().map(|e| e.tree.format_line(&k3)).collect();
        assert_eq!(lines.len(), 3);
        for want in ["root=0; 1:0,2:0", "root=0; 1:0,2:1", "root=0; 1:2,2:0"] {
            assert!(lines.iter().any(|l| l == want), "{lines:?}");
        }
        assert!(cat.entries.iter().all(|e| e.weight == int(1)));

        let k4 = fixtures::bidirected_complete(4);
        let cat = enumerate_arborescences(&k4, &ExactWeights::from_graph(&k4), 2).unwrap();
        assert_eq!(cat.entries.len(), 16);

        let big = fixtures::cycle(9);
        assert!(matches!(
            enumerate_arborescences(&big, &ExactWeights::from_graph(&big), 0),
            Err(Error::TooLarge { n: 9, limit: 8 })
        ));
    }

    #[test]
    fn count_examples() {
        let g = fixtures::cycle(3);
        assert_eq!(count_arborescences(&g, &ExactWeights::from_graph(&g), 0), int(1));
        let k3 = fixtures::bidirected_complete(3);
        assert_eq!(count_arborescences(&k3, &ExactWeights::from_graph(&k3), 0), int(3));
        let k4 = fixtures::bidirected_complete(4);
        assert_eq!(count_arborescences(&k4, &ExactWeights::from_graph(&k4), 0), int(16));
        let single = WeightedDigraph::new(1, vec![]).unwrap();
        assert_eq!(count_arborescences(&single, &ExactWeights::new(vec![]), 0), int(1));
    }

    #[test]
    fn count_matches_enumeration_and_scales() {
        for seed in 0..30 {
            let g = fixtures::random_strongly_connected(5, 7, seed);
            let w = ExactWeights::from_graph(&g);
            for r in 0..5 {
                let cat = enumerate_arborescences(&g, &w, r).unwrap();
                let count = count_arborescences(&g, &w, r);
                assert_eq!(cat.total, count);
                let c = int(3);
                let scaled = ExactWeights::new(w.values().iter().map(|x| x * &c).collect());
                assert_eq!(count_arborescences(&g, &scaled, r), count * c.pow(4));
            }
        }
    }

    #[test]
    fn transition_weight_counts_give_stationary_law() {
        for seed in 0..10 {
            let g = fixtures::random_strongly_connected(5, 6, seed);
            let probs: Vec<BigRational> = g
                .edges()
                .iter()
                .map(|e| BigRational::from_f64(e.weight / g.out_degree(e.src)).unwrap())
                .collect();
            let w = ExactWeights::new(probs);
            let counts: Vec<f64> = (0..5).map(|r| to_f64(&count_arborescences(&g, &w, r))).collect();
            let total: f64 = counts.iter().sum();
            let pi = crate::walk::stationary_distribution(&g).unwrap();
            for (r, c) in counts.iter().enumerate() {
                assert!((c / total - pi.get(r)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_stationary_matches_float() {
        let g = fixtures::random_strongly_connected(4, 4, 1);
        let exact = exact_stationary(&g, &ExactWeights::from_graph(&g)).unwrap();
        let pi = crate::walk::stationary_distribution(&g).unwrap();
        for (v, x) in exact.iter().enumerate() {
            assert!((to_f64(x) - pi.get(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn report_examples() {
        let k3 = fixtures::bidirected_complete(3);
        let cat = enumerate_arborescences(&k3, &ExactWeights::from_graph(&k3), 0).unwrap();
        let exact: Vec<_> = cat.entries.iter().map(|e| e.tree.clone()).collect();
        let rep = distribution_report(&k3, &exact, std::slice::from_ref(&cat)).unwrap();
        assert_eq!(rep.tv, 0.0);
        let skewed = vec![exact[0].clone(); 3];
        let rep = distribution_report(&k3, &skewed, std::slice::from_ref(&cat)).unwrap();
        assert!((rep.tv - 2.0 / 3.0).abs() < 1e-12);

        let stranger = Arborescence { root: 1, parent_edge: vec![Some(0), None, Some(4)] };
        assert!(matches!(
            distribution_report(&k3, &[stranger], std::slice::from_ref(&cat)),
            Err(Error::UnknownTree { .. })
        ));
    }

    #[test]
    fn exact_draws_concentrate() {
        use rand::{Rng, SeedableRng};
        let k3 = fixtures::bidirected_complete(3);
        let cats = enumerate_all(&k3, &ExactWeights::from_graph(&k3)).unwrap();
        let trees: Vec<_> = cats.iter().flat_map(|c| c.entries.iter().map(|e| e.tree.clone())).collect();
        let n = 200_000;
        assert!(tv_tail_bound(trees.len(), n, 0.01) < 0.01);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let samples: Vec<_> = (0..n).map(|_| trees[rng.gen_range(0..trees.len())].clone()).collect();
        let rep = distribution_report(&k3, &samples, &cats).unwrap();
        assert!(rep.tv < 0.01);
        assert!(rep.chi_square_p > 0.001);
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rational(&int(3)), "3");
        assert_eq!(format_rational(&BigRational::new(1.into(), 4.into())), "0.25");
        assert_eq!(format_rational(&BigRational::new(7.into(), 50.into())), "0.14");
        assert_eq!(format_rational(&BigRational::new(1.into(), 3.into())), "1/3");
        assert_eq!(format_rational(&BigRational::new(1.into(), 1000.into())), "0.001");
        assert_eq!(format_rational(&BigRational::new(21.into(), 2.into())), "10.5");
    }
}
