//! `bench`: generate gather workloads, run them through the access
//! simulator, and emit reproducible reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use unified_bench::graph::{load_graph, GraphFormat};
use unified_bench::report::{emit_report, ReportFormat};
use unified_bench::sample::sample_neighbors;
use unified_bench::workload::{run_preset, Preset};
use unified_sim::InterconnectConfig;

#[derive(Parser)]
#[command(name = "bench", about = "Gather workload benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark preset and emit a report.
    Run {
        /// Preset: fig7, fig8, or sampler.
        #[arg(long)]
        preset: String,
        /// Interconnect config file (key=value lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Divisor shrinking pool and index counts proportionally.
        #[arg(long, default_value_t = 1)]
        scale: u64,
        /// Report format: csv or markdown.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a graph, sample a minibatch neighborhood, and print a summary.
    Graph {
        /// Input graph file.
        #[arg(long)]
        input: PathBuf,
        /// Input format: edgelist or csr.
        #[arg(long, default_value = "edgelist")]
        format: String,
        /// Number of root nodes (ids 0..batch).
        #[arg(long)]
        batch: u64,
        /// Neighbors sampled per node per hop.
        #[arg(long)]
        fanout: usize,
        /// Expansion rounds.
        #[arg(long)]
        hops: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> unified_bench::Result<()> {
    match cli.command {
        Command::Run {
            preset,
            config,
            seed,
            scale,
            format,
            out,
        } => {
            let preset: Preset = preset.parse()?;
            let format: ReportFormat = format.parse()?;
            let cfg = match config {
                Some(path) => InterconnectConfig::from_file(&path)?,
                None => InterconnectConfig::default(),
            };
            let report = run_preset(preset, seed, scale, &cfg)?;
            emit_report(&report, format, out.as_deref())?;
            Ok(())
        }
        Command::Graph {
            input,
            format,
            batch,
            fanout,
            hops,
            seed,
        } => {
            let format: GraphFormat = format.parse()?;
            let graph = load_graph(&input, format)?;
            let roots: Vec<u64> = (0..batch.min(graph.num_nodes() as u64)).collect();
            let sampled = sample_neighbors(&graph, &roots, fanout, hops, seed)?;
            println!(
                "nodes={} edges={} batch={} fanout={} hops={} sampled={}",
                graph.num_nodes(),
                graph.num_edges(),
                roots.len(),
                fanout,
                hops,
                sampled.len()
            );
            let head: Vec<String> = sampled.iter().take(16).map(u64::to_string).collect();
            println!("first_sampled=[{}]", head.join(","));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("bench: {err}");
            ExitCode::FAILURE
        }
    }
}
