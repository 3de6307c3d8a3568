use arbor_core::fixtures;
use arbor_core::graph::VertexSubset;
use arbor_core::hierarchy::build_hierarchy;
use arbor_core::oracle::{count_arborescences, enumerate_arborescences, ExactWeights};
use arbor_core::reduction::reduce;
use arbor_core::sampler::{HierarchicalSampler, SamplerOptions};
use arbor_core::walk::schur_complement;
use arbor_core::{Edge, WeightedDigraph};
use num_rational::BigRational;
use proptest::prelude::*;

/// Random digraph in which every vertex reaches 0, not necessarily strongly connected.
fn reaching_zero() -> impl Strategy<Value = WeightedDigraph> {
    (2usize..=20).prop_flat_map(|n| {
        let chain = proptest::collection::vec((0usize..n, 0.1f64..10.0), n - 1);
        let extra = proptest::collection::vec((0usize..n, 0usize..n, 0.1f64..10.0), 0..3 * n);
        (Just(n), chain, extra).prop_map(|(n, chain, extra)| {
            let mut edges: Vec<Edge> = chain
                .into_iter()
                .enumerate()
                // Vertex v + 1 points at some lower vertex, so every vertex reaches 0.
                .map(|(v, (t, w))| Edge { src: v + 1, dst: t % (v + 1), weight: w })
                .collect();
            edges.extend(extra.into_iter().map(|(src, dst, weight)| Edge { src, dst, weight }));
            WeightedDigraph::new(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hierarchy_invariants_on_eulerian_graphs(n in 2usize..=50, cycles in 0usize..40, seed in any::<u64>()) {
        let g = fixtures::random_eulerian(n, cycles, seed);
        let h = build_hierarchy(&g).unwrap();
        prop_assert_eq!(h.validate(&g), Ok(()));
        prop_assert!(h.internal_count() <= 2 * n);
    }

    #[test]
    fn schur_complement_preserves_degrees(n in 3usize..=30, cycles in 0usize..20, seed in any::<u64>(), pick in any::<u64>()) {
        let g = fixtures::random_eulerian(n, cycles, seed);
        let members: Vec<usize> = (0..n).filter(|v| (pick >> (v % 64)) & 1 == 1).collect();
        prop_assume!(!members.is_empty());
        let s = VertexSubset::new(n, members).unwrap();
        let sc = schur_complement(&g, &s).unwrap();
        let scale = g.edges().iter().map(|e| e.weight).fold(0.0, f64::max);
        prop_assert!(sc.graph.eulerian_residual() <= 1e-9 * scale);
        for (a, &u) in sc.vertex_map.iter().enumerate() {
            prop_assert!((sc.graph.out_degree(a) - g.out_degree(u)).abs() <= 1e-9 * g.out_degree(u));
        }
    }

    #[test]
    fn reduction_is_eulerian_and_patches_only_leave_the_root(g in reaching_zero()) {
        let red = reduce(&g, 0).unwrap();
        let gg = &red.eulerian_graph;
        prop_assert!(gg.eulerian_residual() <= 1e-9 * gg.edges().iter().map(|e| e.weight).fold(0.0, f64::max));
        prop_assert!(gg.is_strongly_connected());
        for (e, edge) in g.edges().iter().enumerate() {
            prop_assert_eq!((gg.edge(e).src, gg.edge(e).dst), (edge.src, edge.dst));
        }
        for &p in &red.patch_edges {
            prop_assert!(p >= g.m());
            prop_assert_eq!(gg.edge(p).src, 0);
        }
        prop_assert_eq!(red.patch_edges.len() + g.m(), gg.m());
        prop_assert!(build_hierarchy(gg).unwrap().validate(gg).is_ok());
    }

    #[test]
    fn sampled_trees_avoid_patch_edges(g in reaching_zero(), seed in any::<u64>()) {
        let s = HierarchicalSampler::new(&g, SamplerOptions { root: Some(0), ..Default::default() }).unwrap();
        for i in 0..4 {
            let t = s.sample(seed, i).unwrap().arborescence;
            prop_assert!(g.validate_arborescence(&t).is_ok());
            prop_assert!(t.edges().all(|e| e < g.m()));
            prop_assert_eq!(t.root, 0);
        }
    }

    #[test]
    fn counts_match_enumeration(n in 2usize..=5, extra in 0usize..6, seed in any::<u64>(), scale in 1i64..5) {
        let g = fixtures::random_strongly_connected(n, extra, seed);
        let w = ExactWeights::from_graph(&g);
        for r in 0..n {
            let c = count_arborescences(&g, &w, r);
            prop_assert_eq!(&c, &enumerate_arborescences(&g, &w, r).unwrap().total);
            let k = BigRational::from_integer(scale.into());
            let scaled = ExactWeights::new(w.values().iter().map(|x| x * &k).collect());
            let expect = c * num_traits::pow(k, n - 1);
            prop_assert_eq!(count_arborescences(&g, &scaled, r), expect);
        }
    }
}
