use arbor_core::fixtures;
use arbor_core::oracle::{
    distribution_report, empirical_tv, enumerate_all, enumerate_arborescences, ExactWeights,
};
use arbor_core::sampler::{CacheMode, HierarchicalSampler, JumpStrategy, SamplerOptions, SequentialSampler};
use arbor_core::{Arborescence, WeightedDigraph};

fn hierarchical(g: &WeightedDigraph, opts: SamplerOptions, seed: u64, n: u64) -> Vec<Arborescence> {
    let s = HierarchicalSampler::new(g, opts).unwrap();
    s.sample_many(seed, n).unwrap().into_iter().map(|o| o.arborescence).collect()
}

fn sequential(g: &WeightedDigraph, seed: u64, n: u64) -> Vec<Arborescence> {
    let s = SequentialSampler::new(g, None).unwrap();
    (0..n).map(|i| s.sample(seed, i).unwrap().arborescence).collect()
}

fn check(g: &WeightedDigraph, samples: &[Arborescence], tv_max: f64) {
    let catalogs = enumerate_all(g, &ExactWeights::from_graph(g)).unwrap();
    let r = distribution_report(g, samples, &catalogs).unwrap();
    assert!(r.tv <= tv_max, "tv {} > {tv_max}", r.tv);
    assert!(r.chi_square_p > 0.001, "p {}", r.chi_square_p);
}

#[test]
fn k3_hierarchical_matches_oracle() {
    let g = fixtures::bidirected_complete(3);
    check(&g, &hierarchical(&g, SamplerOptions::default(), 1, 200_000), 0.01);
}

#[test]
fn k3_sequential_matches_oracle() {
    let g = fixtures::bidirected_complete(3);
    check(&g, &sequential(&g, 2, 200_000), 0.01);
}

#[test]
fn c3_roots_are_uniform() {
    let g = fixtures::cycle(3);
    let samples = hierarchical(&g, SamplerOptions::default(), 3, 100_000);
    let catalogs = enumerate_all(&g, &ExactWeights::from_graph(&g)).unwrap();
    let r = distribution_report(&g, &samples, &catalogs).unwrap();
    assert_eq!(r.per_tree_counts.len(), 3);
    assert!(r.chi_square_p > 0.01, "p {}", r.chi_square_p);
}

#[test]
fn heavy_barbell_matches_oracle() {
    let g = fixtures::barbell(1e6);
    check(&g, &hierarchical(&g, SamplerOptions::default(), 4, 100_000), 0.02);
}

#[test]
fn fixed_root_matches_its_catalog() {
    let g = fixtures::random_strongly_connected(5, 3, 7);
    let opts = SamplerOptions { root: Some(2), ..Default::default() };
    let samples = hierarchical(&g, opts, 5, 100_000);
    let catalog = enumerate_arborescences(&g, &ExactWeights::from_graph(&g), 2).unwrap();
    let r = distribution_report(&g, &samples, &[catalog]).unwrap();
    assert!(r.tv <= 0.015, "tv {}", r.tv);
    assert!(r.chi_square_p > 0.001, "p {}", r.chi_square_p);
}

#[test]
fn fixed_root_on_a_graph_that_needs_patching() {
    // 1 and 2 reach 0 but 0 reaches nothing: only 0-rooted trees exist.
    let g = WeightedDigraph::from_triples(3, &[(1, 0, 2.0), (2, 1, 1.0), (2, 0, 3.0), (1, 2, 0.5)]).unwrap();
    let opts = SamplerOptions { root: Some(0), ..Default::default() };
    let samples = hierarchical(&g, opts, 6, 100_000);
    let catalog = enumerate_arborescences(&g, &ExactWeights::from_graph(&g), 0).unwrap();
    let r = distribution_report(&g, &samples, &[catalog]).unwrap();
    assert!(r.tv <= 0.015, "tv {}", r.tv);
    assert!(r.chi_square_p > 0.001, "p {}", r.chi_square_p);
    let seq = SequentialSampler::new(&g, Some(0)).unwrap();
    let base: Vec<_> = (0..100_000).map(|i| seq.sample(7, i).unwrap().arborescence).collect();
    assert!(empirical_tv(&samples, &base) <= 0.02);
}

#[test]
fn random_small_graphs_agree_across_samplers() {
    for k in 0..4 {
        let g = fixtures::random_strongly_connected(4 + k % 2, 2, 40 + k as u64);
        let h = hierarchical(&g, SamplerOptions::default(), k as u64, 200_000);
        let s = sequential(&g, 100 + k as u64, 200_000);
        check(&g, &h, 0.015);
        check(&g, &s, 0.015);
        let tv = empirical_tv(&h, &s);
        assert!(tv <= 0.02, "graph {k}: tv between samplers {tv}");
    }
}

#[test]
fn fresh_mode_matches_oracle() {
    for g in [fixtures::bidirected_complete(3), fixtures::random_eulerian(4, 3, 9)] {
        let opts = SamplerOptions { mode: CacheMode::Fresh, ..Default::default() };
        check(&g, &hierarchical(&g, opts, 8, 200_000), 0.015);
    }
}

#[test]
fn small_store_still_matches_oracle() {
    // A tiny store forces frequent replacements.
    let g = fixtures::random_eulerian(4, 3, 9);
    let opts = SamplerOptions { cache: Some(2), ..Default::default() };
    check(&g, &hierarchical(&g, opts, 10, 200_000), 0.015);
}

#[test]
fn doubling_strategy_gives_identical_samples() {
    let g = fixtures::random_strongly_connected(6, 4, 3);
    let a = hierarchical(&g, SamplerOptions::default(), 12, 300);
    let opts = SamplerOptions { strategy: JumpStrategy::Doubling, ..Default::default() };
    assert_eq!(a, hierarchical(&g, opts, 12, 300));
}
