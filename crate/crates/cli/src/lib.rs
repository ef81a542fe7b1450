//! `mdmsc` command-line front-end.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{RunArgs, RunConfig};
pub use error::{Category, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "mdmsc", version, about = "Manifold-aware micro-cluster spectral clustering")]
pub struct Cli {
    /// TOML file with run settings; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one dataset and write labels, metrics and optional dumps.
    Cluster(RunArgs),
    /// Grid search over k and beta, ranked by ACC.
    Sweep(SweepArgs),
    /// Score an existing label file against ground truth.
    Eval(EvalArgs),
    /// Stage timings and accuracy for several datasets and algorithms.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Inclusive k range, `lo:hi`.
    #[arg(long, default_value = "2:50")]
    pub k_range: String,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',', default_value = "8,16")]
    pub betas: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predicted labels (single column, optional `label` header).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth label file; otherwise the labels of --input are used.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Parses `lo:hi` (or `lo..=hi`, or a single value) into an inclusive list.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Config(format!("bad range `{s}`, expected lo:hi"));
    let (lo, hi) = match s.split_once(':').or_else(|| s.split_once("..=")) {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v: usize = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

pub fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Cluster(args) => {
            let cfg = RunConfig::resolve(file, &args)?;
            let summary = commands::cluster(&cfg)?;
            summary.print();
        }
        Command::Sweep(args) => {
            let cfg = RunConfig::resolve(file, &args.run)?;
            let ks = parse_range(&args.k_range)?;
            let summary = commands::sweep(&cfg, &ks, &args.betas)?;
            summary.print();
        }
        Command::Eval(args) => {
            let cfg = RunConfig::resolve(file, &args.run)?;
            let report = commands::eval(&cfg, &args.pred, args.truth.as_deref())?;
            println!("{}", report.summary());
        }
        Command::Bench(args) => {
            let cfg = RunConfig::resolve(file, &args.run)?;
            let report = bench::bench(&cfg, &args)?;
            report.print();
        }
    }
    Ok(())
}
