use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nnrd::graph::validate_dataset;
use nnrd::ingest::{generate_synthetic, load_dataset, save_dataset, SyntheticKind, SyntheticSpec};
use nnrd::neural::Readout;
use nnrd::report::{caption, run_profile, DataSource, RunRequest};
use nnrd::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nnrd",
    version,
    about = "Structure vs. feature information profiling for graph datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep both noise axes and write curves.csv, report.json, curves.svg.
    Profile(ProfileArgs),
    /// Check a dataset directory and print every violation.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Write a synthetic dataset in the on-disk format.
    Synth {
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        spec: SynthArgs,
        #[arg(long, default_value_t = RunRequest::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "synth-graphs", default_value_t = 800)]
    graphs: usize,
    /// Inclusive node-count range, `LO:HI`.
    #[arg(long = "synth-nodes", default_value = "8:16", value_parser = parse_range)]
    nodes: (usize, usize),
    #[arg(long = "synth-dim", default_value_t = 4)]
    dim: usize,
    #[arg(long = "synth-mix", default_value_t = 0.5)]
    mix: f64,
}

impl SynthArgs {
    fn spec(&self, kind: SyntheticKind) -> SyntheticSpec {
        SyntheticSpec {
            feature_dim: self.dim,
            noise_mix: self.mix,
            ..SyntheticSpec::new(kind, self.graphs, self.nodes)
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    synth: Option<SyntheticKind>,
    #[command(flatten)]
    spec: SynthArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    levels: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = RunRequest::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 100)]
    hidden: usize,
    #[arg(long, default_value = "mean")]
    readout: Readout,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn profile(args: ProfileArgs) -> Result<()> {
    let source = match (args.dataset, args.synth) {
        (Some(dir), None) => DataSource::Directory(dir),
        (None, Some(kind)) => DataSource::Synthetic(args.spec.spec(kind)),
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --dataset and --synth is required".into(),
            ))
        }
    };
    let request = RunRequest {
        levels: args.levels,
        repeats: args.repeats,
        seed: args.seed,
        epochs: args.epochs,
        batch_size: args.batch,
        hidden: args.hidden,
        readout: args.readout,
        ..RunRequest::new(source, args.out)
    };
    let report = run_profile(&request)?;
    println!(
        "{}: baseline {} = {:.4}, {}",
        report.dataset,
        report.metric.as_str(),
        report.baseline,
        caption(&report)
    );
    println!("wrote {}", request.out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Profile(args) => profile(args).map(|_| true),
        Command::Validate { dataset } => {
            let violations = match load_dataset(&dataset) {
                Ok(ds) => {
                    let violations = validate_dataset(&ds);
                    if violations.is_empty() {
                        println!(
                            "ok: {} graphs, {} nodes, {} edges",
                            ds.num_graphs(),
                            ds.total_nodes(),
                            ds.total_edges()
                        );
                    }
                    violations
                }
                Err(Error::InvalidDataset(violations)) => violations,
                Err(e) => return Err(e),
            };
            for v in &violations {
                println!("{v}");
            }
            Ok(violations.is_empty())
        }
        Command::Synth {
            kind,
            out,
            spec,
            seed,
        } => {
            let ds = generate_synthetic(&spec.spec(kind), seed)?;
            save_dataset(&ds, &out)?;
            println!("wrote {} graphs to {}", ds.num_graphs(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
