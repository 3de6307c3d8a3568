//! Subcommands of the `arbor` binary. Every function returns the text written
//! to standard output; diagnostics and errors go through [`arbor_core::Error`].

pub mod graphfile;

use std::fmt::Write as _;

use arbor_core::hierarchy::build_hierarchy;
use arbor_core::oracle::{count_arborescences, distribution_report, enumerate_all, enumerate_arborescences};
use arbor_core::oracle::{format_rational, TreeCount, ENUMERATION_LIMIT};
use arbor_core::reduction::{reduce, root_law};
use arbor_core::sampler::{HierarchicalSampler, SamplerOptions, SequentialSampler};
use arbor_core::{Arborescence, Error, Result, VertexId};
use rayon::prelude::*;
use serde::Serialize;

use graphfile::GraphFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Hierarchical,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleArgs {
    pub seed: u64,
    pub root: Option<VertexId>,
    pub samples: u64,
    pub mode: Mode,
    pub budget: Option<u64>,
    pub cache: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub trees: Vec<Arborescence>,
    /// Budget doublings beyond the first round, summed over samples.
    pub retries: u64,
    /// Mean budget of the successful rounds (walk steps for the baseline).
    pub mean_budget_used: f64,
}

fn check_root(file: &GraphFile, root: Option<VertexId>) -> Result<()> {
    match root {
        Some(r) if r >= file.n => Err(Error::InvalidArgument(format!("root {r} outside 0..{}", file.n))),
        _ => Ok(()),
    }
}

pub fn draw_samples(file: &GraphFile, args: &SampleArgs) -> Result<Samples> {
    check_root(file, args.root)?;
    let g = file.to_graph()?;
    let count = args.samples;
    match args.mode {
        Mode::Hierarchical => {
            let opts = SamplerOptions {
                root: args.root,
                budget: args.budget,
                cache: args.cache,
                ..Default::default()
            };
            let sampler = HierarchicalSampler::new(&g, opts)?;
            let out = sampler.sample_many(args.seed, count)?;
            let retries = out.iter().map(|o| u64::from(o.rounds - 1)).sum();
            let mean_budget_used = out.iter().map(|o| o.budget as f64).sum::<f64>() / count.max(1) as f64;
            Ok(Samples {
                trees: out.into_iter().map(|o| o.arborescence).collect(),
                retries,
                mean_budget_used,
            })
        }
        Mode::Sequential => {
            let sampler = SequentialSampler::new(&g, args.root)?;
            let out = (0..count)
                .into_par_iter()
                .map(|i| sampler.sample(args.seed, i))
                .collect::<Result<Vec<_>>>()?;
            let mean_budget_used = out.iter().map(|o| o.steps as f64).sum::<f64>() / count.max(1) as f64;
            Ok(Samples {
                trees: out.into_iter().map(|o| o.arborescence).collect(),
                retries: 0,
                mean_budget_used,
            })
        }
    }
}

pub fn cmd_sample(file: &GraphFile, args: &SampleArgs) -> Result<String> {
    let g = file.to_graph()?;
    let samples = draw_samples(file, args)?;
    let mut out = String::new();
    for t in &samples.trees {
        out.push_str(&t.format_line(&g));
        out.push('\n');
    }
    Ok(out)
}

/// Exact total weight of the arborescences rooted at `root`.
pub fn cmd_count(file: &GraphFile, root: VertexId) -> Result<String> {
    check_root(file, Some(root))?;
    let g = file.to_graph()?;
    Ok(format!("{}\n", format_rational(&count_arborescences(&g, &file.exact_weights(), root))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Reduce,
    Hierarchy,
}

pub fn cmd_inspect(file: &GraphFile, stage: Stage, root: VertexId) -> Result<String> {
    check_root(file, Some(root))?;
    let g = file.to_graph()?;
    let mut out = String::new();
    match stage {
        Stage::Reduce => {
            let red = reduce(&g, root)?;
            let _ = writeln!(out, "root: {root}");
            match root_law(&g) {
                Ok(law) => {
                    let p: Vec<String> = law.probabilities().iter().map(|p| format!("{p:.6}")).collect();
                    let _ = writeln!(out, "root law: {}", p.join(" "));
                }
                Err(e) => {
                    let _ = writeln!(out, "root law: unavailable ({e})");
                }
            }
            let _ = writeln!(out, "patch edges: {}", red.patch_edges.len());
            for &e in &red.patch_edges {
                let edge = red.eulerian_graph.edge(e);
                let _ = writeln!(out, "  edge {e}: {}->{}", edge.src, edge.dst);
            }
            let _ = writeln!(out, "eulerian residual: {:.3e}", red.eulerian_graph.eulerian_residual());
            let _ = writeln!(out, "edges:");
            for (e, edge) in red.eulerian_graph.edges().iter().enumerate() {
                let _ = writeln!(out, "  {e}: {}->{} {:.9e}", edge.src, edge.dst, edge.weight);
            }
        }
        Stage::Hierarchy => {
            let eulerian = if g.is_eulerian(1e-9) && g.is_strongly_connected() {
                let _ = writeln!(out, "graph: input (Eulerian)");
                g
            } else {
                let _ = writeln!(out, "graph: reduced toward root {root}");
                reduce(&g, root)?.eulerian_graph
            };
            let h = build_hierarchy(&eulerian)?;
            let _ = writeln!(out, "internal nodes: {}", h.internal_count());
            out.push_str(&h.export_text());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub samples: u64,
    pub tv: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub chi_square_p: f64,
    pub per_tree_counts: Vec<TreeCount>,
    pub retries: u64,
    pub mean_budget_used: f64,
}

/// Samples and compares the empirical law with the exact one.
pub fn verify(file: &GraphFile, args: &SampleArgs) -> Result<VerifyReport> {
    if file.n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { n: file.n, limit: ENUMERATION_LIMIT });
    }
    check_root(file, args.root)?;
    let g = file.to_graph()?;
    let w = file.exact_weights();
    let catalogs = match args.root {
        Some(r) => vec![enumerate_arborescences(&g, &w, r)?],
        None => enumerate_all(&g, &w)?,
    };
    let samples = draw_samples(file, args)?;
    let report = distribution_report(&g, &samples.trees, &catalogs)?;
    Ok(VerifyReport {
        schema: "1",
        samples: report.samples,
        tv: report.tv,
        chi_square: report.chi_square,
        degrees_of_freedom: report.degrees_of_freedom,
        chi_square_p: report.chi_square_p,
        per_tree_counts: report.per_tree_counts,
        retries: samples.retries,
        mean_budget_used: samples.mean_budget_used,
    })
}

pub fn cmd_verify(file: &GraphFile, args: &SampleArgs) -> Result<String> {
    let report = verify(file, args)?;
    let mut out = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.push('\n');
    Ok(out)
}
