//! `bace`: reliability, aggregation, evaluation and simulation from the command line.
//!
//! Exit codes: 0 success, 1 user or data error, 2 internal error.

mod commands;
mod manifest;

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use bace_core::{Model, TieMode};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bace", version, about = "Aggregate multi-coder annotations and measure intercoder reliability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a JSON reliability report (agreement, Cohen's and Fleiss' kappa, Krippendorff's alpha).
    Reliability(ReliabilityArgs),
    /// Fit one model and write per-item labels (CSV) and coder profiles (JSON).
    Aggregate(AggregateArgs),
    /// Score models against a gold set on clear and ambiguous items.
    Evaluate(EvaluateArgs),
    /// Generate annotations and true labels from known coder parameters.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Long-form annotations CSV with header `item_id,coder_id,label`.
    #[arg(long)]
    input: PathBuf,
    /// Explicit label order as a comma list; by default labels keep their first-appearance order.
    #[arg(long, value_name = "A,B,...")]
    labels: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SamplerArgs {
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    chains: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EmArgs {
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0.01)]
    smoothing: f64,
}

#[derive(Debug, Args)]
struct ReliabilityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Report path (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_model)]
    model: Model,
    /// Labels path (CSV).
    #[arg(long)]
    output: PathBuf,
    /// Coder profiles path (JSON); defaults to `<output>.profiles.json`.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "deterministic", value_parser = parse_tie)]
    tie: TieMode,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    em: EmArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Gold CSV with header `item_id,gold_label`.
    #[arg(long)]
    gold: PathBuf,
    /// Comparison table path (JSON).
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "bace,majority,ds", value_parser = parse_model)]
    models: Vec<Model>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "deterministic", value_parser = parse_tie)]
    tie: TieMode,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    em: EmArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation config (JSON); defaults to the built-in three-coder valence setup.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-coder competence, overriding the config.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    missing_rate: Option<f64>,
    /// Label names, overriding the config.
    #[arg(long, value_name = "A,B,...")]
    labels: Option<String>,
    /// Annotations path (CSV).
    #[arg(long)]
    output: PathBuf,
    /// True labels path (CSV, `item_id,gold_label`).
    #[arg(long)]
    truth: PathBuf,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.trim().parse()
}

fn parse_tie(s: &str) -> Result<TieMode, String> {
    s.trim().parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| commands::run(cli.command))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error");
            ExitCode::from(2)
        }
    }
}
