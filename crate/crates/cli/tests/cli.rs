use std::path::Path;
use std::process::{Command, Output};

use arbor_cli::graphfile::GraphFile;
use arbor_cli::{draw_samples, verify, Mode, SampleArgs};
use arbor_core::oracle::{distribution_report, empirical_tv, enumerate_all};
use arbor_core::Arborescence;
use num_rational::BigRational;
use proptest::prelude::*;

const C3: &str = "3 3\n0 1 1\n1 2 1\n2 0 1\n";
const K3: &str = "3 3 undirected\n0 1 1\n1 2 1\n0 2 1\n";
const K4: &str = "4 6 undirected\n0 1 1\n0 2 1\n0 3 1\n1 2 1\n1 3 1\n2 3 1\n";
const BARBELL: &str = "# a <-> b heavy, b <-> c light\n3 2 undirected\n0 1 1000\n1 2 1\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn arbor(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_arbor"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("ARBOR_WORKERS", w),
        None => cmd.env_remove("ARBOR_WORKERS"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn args(seed: u64, samples: u64, mode: Mode) -> SampleArgs {
    SampleArgs { seed, root: None, samples, mode, budget: None, cache: None }
}

#[test]
fn sample_prints_valid_lines_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let c3 = write(dir.path(), "c3.txt", C3);
    let first = stdout(&arbor(&["sample", "--graph", &c3, "--seed", "1", "--samples", "1"], None));
    let valid = ["root=0; 1:2,2:0\n", "root=1; 0:1,2:0\n", "root=2; 0:1,1:2\n"];
    assert!(valid.contains(&first.as_str()), "{first}");
    let again = stdout(&arbor(&["sample", "--graph", &c3, "--seed", "1", "--samples", "1"], None));
    assert_eq!(first, again);
}

#[test]
fn output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = write(dir.path(), "k4.txt", K4);
    for mode in ["hierarchical", "sequential"] {
        let run = |w| {
            stdout(&arbor(&["sample", "--graph", &k4, "--seed", "9", "--samples", "200", "--mode", mode], w))
        };
        let base = run(Some("1"));
        assert_eq!(base.lines().count(), 200);
        assert_eq!(base, run(Some("4")));
        assert_eq!(base, run(Some("8")));
        assert_eq!(base, run(None));
    }
}

#[test]
fn modes_agree_on_k3() {
    let file = GraphFile::parse(K3).unwrap();
    let h = draw_samples(&file, &args(1, 200_000, Mode::Hierarchical)).unwrap();
    let s = draw_samples(&file, &args(2, 200_000, Mode::Sequential)).unwrap();
    let tv = empirical_tv(&h.trees, &s.trees);
    assert!(tv <= 0.02, "tv {tv}");
}

#[test]
fn count_examples() {
    let dir = tempfile::tempdir().unwrap();
    for (text, expect) in [(C3, "1\n"), (K3, "3\n"), (K4, "16\n")] {
        let path = write(dir.path(), "g.txt", text);
        assert_eq!(stdout(&arbor(&["count", "--graph", &path, "--root", "0"], None)), expect);
    }
    let path = write(dir.path(), "w.txt", "2 2\n0 1 1/3\n1 0 2.5\n");
    assert_eq!(stdout(&arbor(&["count", "--graph", &path, "--root", "0"], None)), "2.5\n");
    assert_eq!(stdout(&arbor(&["count", "--graph", &path, "--root", "1"], None)), "1/3\n");
}

#[test]
fn inspect_examples() {
    let dir = tempfile::tempdir().unwrap();
    let barbell = write(dir.path(), "b.txt", BARBELL);
    let out = stdout(&arbor(&["inspect", "--graph", &barbell, "--stage", "hierarchy"], None));
    assert!(out.contains("internal nodes: 2"), "{out}");
    assert!(out.contains("{0,1,2} w_max=1 "), "{out}");
    assert!(out.contains("{0,1} w_max=1000 "), "{out}");

    let c3 = write(dir.path(), "c3.txt", C3);
    let out = stdout(&arbor(&["inspect", "--graph", &c3, "--stage", "reduce"], None));
    assert!(out.contains("patch edges: 1\n  edge 3: 0->2\n"), "{out}");

    let k3 = write(dir.path(), "k3.txt", K3);
    let out = stdout(&arbor(&["inspect", "--graph", &k3, "--stage", "reduce"], None));
    assert!(out.contains("patch edges: 0\n"), "{out}");
    let residual: f64 =
        out.lines().find_map(|l| l.strip_prefix("eulerian residual: ")).unwrap().parse().unwrap();
    assert!(residual <= 1e-9);
}

#[test]
fn verify_examples() {
    let k3 = GraphFile::parse(K3).unwrap();
    let r = verify(&k3, &args(5, 200_000, Mode::Hierarchical)).unwrap();
    assert!(r.tv <= 0.01, "tv {}", r.tv);
    assert_eq!(r.per_tree_counts.len(), 9);
    assert_eq!(r.per_tree_counts.iter().map(|t| t.count).sum::<u64>(), 200_000);

    let c3 = GraphFile::parse(C3).unwrap();
    let r = verify(&c3, &args(5, 100, Mode::Hierarchical)).unwrap();
    // Every root has one tree, so the only randomness is in the root counts.
    let roots = r.per_tree_counts.iter().map(|t| t.count as f64 / 100.0 - t.expected);
    assert!(roots.map(f64::abs).sum::<f64>() / 2.0 == r.tv);
    assert!(r.per_tree_counts.iter().all(|t| t.expected == 1.0 / 3.0));

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "k3.txt", K3);
    let out = stdout(&arbor(&["verify", "--graph", &path, "--samples", "1000", "--seed", "3"], None));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["schema"], "1");
    for key in ["tv", "chi_square_p", "per_tree_counts", "retries", "mean_budget_used"] {
        assert!(json.get(key).is_some(), "{key} missing");
    }
}

#[test]
fn c3_verify_with_fixed_root_has_zero_tv() {
    let c3 = GraphFile::parse(C3).unwrap();
    let r = verify(&c3, &SampleArgs { root: Some(1), ..args(5, 100, Mode::Hierarchical) }).unwrap();
    assert_eq!(r.tv, 0.0);
}

#[test]
fn broken_sampler_is_caught() {
    let file = GraphFile::parse(K3).unwrap();
    let g = file.to_graph().unwrap();
    let catalogs = enumerate_all(&g, &file.exact_weights()).unwrap();
    // A "sampler" that returns a cycle instead of a tree: 1 -> 2, 2 -> 1.
    let broken = Arborescence { root: 0, parent_edge: vec![None, Some(2), Some(3)] };
    let err = distribution_report(&g, &[broken], &catalogs).unwrap_err();
    assert!(matches!(err, arbor_core::Error::UnknownTree { .. }), "{err:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "3 2\n0 1 1\n");
    let o = arbor(&["sample", "--graph", &bad, "--seed", "1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let oneway = write(dir.path(), "oneway.txt", "2 1\n0 1 1\n");
    assert_eq!(
        arbor(&["sample", "--graph", &oneway, "--seed", "1", "--root", "0"], None).status.code(),
        Some(3)
    );
    assert_eq!(arbor(&["sample", "--graph", &oneway, "--seed", "1"], None).status.code(), Some(3));
    let o = arbor(&["sample", "--graph", &oneway, "--seed", "1", "--root", "1"], None);
    assert_eq!(stdout(&o), "root=1; 0:1\n");

    let mut big = String::from("9 9\n");
    for v in 0..9 {
        big.push_str(&format!("{v} {} 1\n", (v + 1) % 9));
    }
    let big = write(dir.path(), "big.txt", &big);
    assert_eq!(
        arbor(&["verify", "--graph", &big, "--samples", "10", "--seed", "1"], None).status.code(),
        Some(5)
    );

    let missing = arbor(&["sample", "--graph", "/nonexistent/graph.txt", "--seed", "1"], None);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(arbor(&["sample", "--seed", "1"], None).status.code(), Some(2));
}

fn weight() -> impl Strategy<Value = BigRational> {
    prop_oneof![
        (1i64..1000, 1i64..1000).prop_map(|(p, q)| BigRational::new(p.into(), q.into())),
        (1i64..1_000_000, 0u32..6).prop_map(|(p, k)| BigRational::new(p.into(), 10i64.pow(k).into())),
    ]
}

fn graph_file() -> impl Strategy<Value = GraphFile> {
    (1usize..8, any::<bool>()).prop_flat_map(|(n, undirected)| {
        proptest::collection::vec((0..n, 0..n, weight()), 0..20).prop_map(move |edges| GraphFile {
            n,
            undirected,
            edges,
        })
    })
}

proptest! {
    #[test]
    fn graph_files_round_trip(f in graph_file()) {
        let text = f.format();
        prop_assert_eq!(GraphFile::parse(&text).unwrap(), f);
    }
}
