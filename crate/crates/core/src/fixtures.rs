//! Small named graphs and seeded random families used by tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, WeightedDigraph};

fn build(n: usize, triples: &[(usize, usize, f64)]) -> WeightedDigraph {
    WeightedDigraph::from_triples(n, triples).expect("fixture graphs are valid")
}

/// Directed cycle `0 -> 1 -> ... -> n-1 -> 0` with unit weights.
pub fn cycle(n: usize) -> WeightedDigraph {
    let t: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    build(n, &t)
}

/// Every ordered pair of distinct vertices, unit weights, sorted by (src, dst).
pub fn bidirected_complete(n: usize) -> WeightedDigraph {
    let mut t = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                t.push((u, v, 1.0));
            }
        }
    }
    build(n, &t)
}

/// `a <-> b` with weight `w` and `b <-> c` with weight 1 (a=0, b=1, c=2).
pub fn barbell(w: f64) -> WeightedDigraph {
    build(3, &[(0, 1, w), (1, 0, w), (1, 2, 1.0), (2, 1, 1.0)])
}

/// Chain `0 -> 1 -> ... -> n-1` where every vertex past 0 can also jump back to 0.
/// A walk from 0 needs about `2^n` steps to reach the far end.
pub fn reset_chain(n: usize) -> WeightedDigraph {
    let mut t: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    t.extend((1..n).map(|i| (i, 0, 1.0)));
    build(n, &t)
}

fn random_cycle(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let len = rng.gen_range(2..=n.max(2));
    let mut vs: Vec<usize> = (0..n).collect();
    vs.shuffle(rng);
    vs.truncate(len.min(n));
    vs
}

fn push_cycle(edges: &mut Vec<Edge>, cycle: &[usize], weight: f64) {
    for (i, &u) in cycle.iter().enumerate() {
        let v = cycle[(i + 1) % cycle.len()];
        edges.push(Edge { src: u, dst: v, weight });
    }
}

/// Hamiltonian cycle plus `cycles` random cycles, each with one log-uniform weight in [1, 100].
/// Superposed cycles keep the graph Eulerian and strongly connected.
pub fn random_eulerian(n: usize, cycles: usize, seed: u64) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut base: Vec<usize> = (0..n).collect();
    base.shuffle(&mut rng);
    if n > 1 {
        let w = 100f64.powf(rng.gen::<f64>());
        push_cycle(&mut edges, &base, w);
    }
    for _ in 0..cycles {
        if n < 2 {
            break;
        }
        let c = random_cycle(&mut rng, n);
        let w = 100f64.powf(rng.gen::<f64>());
        push_cycle(&mut edges, &c, w);
    }
    WeightedDigraph::new(n, edges).expect("fixture graphs are valid")
}

/// Hamiltonian cycle plus `extra` random non-loop edges, weights log-uniform in [0.1, 10].
pub fn random_strongly_connected(n: usize, extra: usize, seed: u64) -> WeightedDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut base: Vec<usize> = (0..n).collect();
    base.shuffle(&mut rng);
    let weight = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-1.0..1.0));
    if n > 1 {
        for (i, &u) in base.iter().enumerate() {
            let w = weight(&mut rng);
            edges.push(Edge { src: u, dst: base[(i + 1) % n], weight: w });
        }
        for _ in 0..extra {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            let w = weight(&mut rng);
            edges.push(Edge { src: u, dst: v, weight: w });
        }
    }
    WeightedDigraph::new(n, edges).expect("fixture graphs are valid")
}
