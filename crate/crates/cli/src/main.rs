use std::path::PathBuf;
use std::process::ExitCode;

use arbor_cli::graphfile::read_graph_file;
use arbor_cli::{cmd_count, cmd_inspect, cmd_sample, cmd_verify, Mode, SampleArgs, Stage};
use arbor_core::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

/// Weight-proportional random arborescences of weighted digraphs.
///
/// Exit codes: 0 ok, 1 other failure, 2 parse or invalid graph, 3 unreachable
/// vertex or not strongly connected, 4 coverage failure, 5 graph too large.
/// ARBOR_WORKERS sets the number of worker threads; output never depends on it.
#[derive(Parser)]
#[command(name = "arbor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hierarchical,
    Sequential,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Reduce,
    Hierarchy,
}

#[derive(Subcommand)]
enum Command {
    /// Print sampled arborescences, one per line.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Fix the root instead of drawing it.
        #[arg(long)]
        root: Option<usize>,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        #[arg(long, value_enum, default_value = "hierarchical")]
        mode: ModeArg,
        /// First-round jumping-edge budget per call.
        #[arg(long)]
        budget: Option<u64>,
        /// Stored answers per call key.
        #[arg(long)]
        cache: Option<u64>,
    },
    /// Print the exact total weight of arborescences rooted at ROOT.
    Count {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        root: usize,
    },
    /// Print the reduction audit or the cluster hierarchy.
    Inspect {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        stage: StageArg,
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// Sample and compare with the exact distribution (JSON on stdout).
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        root: Option<usize>,
        #[arg(long, value_enum, default_value = "hierarchical")]
        mode: ModeArg,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        cache: Option<u64>,
    },
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Hierarchical => Mode::Hierarchical,
        ModeArg::Sequential => Mode::Sequential,
    }
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var("ARBOR_WORKERS") else {
        return Ok(());
    };
    let workers: usize = value.parse().ok().filter(|&w| w > 0).ok_or_else(|| {
        Error::InvalidArgument(format!("ARBOR_WORKERS must be a positive integer, got {value:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn run(cli: Cli) -> Result<String> {
    configure_workers()?;
    match cli.command {
        Command::Sample { graph, seed, root, samples, mode: m, budget, cache } => {
            let file = read_graph_file(&graph)?;
            cmd_sample(&file, &SampleArgs { seed, root, samples, mode: mode(m), budget, cache })
        }
        Command::Count { graph, root } => cmd_count(&read_graph_file(&graph)?, root),
        Command::Inspect { graph, stage, root } => {
            let stage = match stage {
                StageArg::Reduce => Stage::Reduce,
                StageArg::Hierarchy => Stage::Hierarchy,
            };
            cmd_inspect(&read_graph_file(&graph)?, stage, root)
        }
        Command::Verify { graph, samples, seed, root, mode: m, budget, cache } => {
            let file = read_graph_file(&graph)?;
            cmd_verify(&file, &SampleArgs { seed, root, samples, mode: mode(m), budget, cache })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("arbor: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
