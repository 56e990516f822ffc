//! `vtid`: extract flow features, rank them with ADDFS and evaluate the
//! selection against baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vtid_core::addfs::SupportMode;
use vtid_core::eval::{ClassifierKind, SelectorKind};

#[derive(Debug, Parser)]
#[command(name = "vtid", version, about = "Video traffic identification with ADDFS feature selection")]
pub struct Cli {
    /// TOML file with [extract], [rank], [eval] and [compare] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this file and to stderr.
    #[arg(long, global = true)]
    echo_config: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn packet traces into a labeled feature CSV.
    Extract(ExtractArgs),
    /// Rank the features of a dataset by ADDFS score.
    Rank(RankArgs),
    /// Cross-validate a classifier over selected feature fractions.
    Eval(EvalArgs),
    /// Compare selectors across datasets with the Wilcoxon test.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trace files or directories (.pcap, .cap, .trace, .csv, .txt).
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// SNI rules, one `pattern<TAB>class` per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    elephant_threshold: Option<usize>,
    #[arg(long)]
    no_elephant_filter: bool,
    /// Also write the feature dictionary here.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[command(flatten)]
    peak: PeakArgs,
}

#[derive(Debug, Args, Default)]
pub struct PeakArgs {
    /// PPP counter width, seconds.
    #[arg(long)]
    alpha: Option<f64>,
    /// PPP horizon, seconds.
    #[arg(long)]
    beta: Option<f64>,
    /// Byte-rate bucket length, seconds.
    #[arg(long)]
    bucket: Option<f64>,
    /// Sliding-window length, seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Window step as a fraction of the window length.
    #[arg(long)]
    offset: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct AddfsArgs {
    #[arg(long)]
    max_intervals: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    support: Option<SupportMode>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Feature CSV or KEEL .dat file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    addfs: AddfsArgs,
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Neighbours for kNN.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rank features on the whole dataset instead of per training fold.
    #[arg(long)]
    leaky_selection: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    selector: Option<SelectorKind>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, value_parser = config::parse_fractions)]
    fractions: Option<config::Fractions>,
    #[command(flatten)]
    model: ClassifierArgs,
    /// Compare all features against all but the peak-point block.
    #[arg(long)]
    ablate_peaks: bool,
    /// Re-extract features from --traces for each window length.
    #[arg(long)]
    window_sweep: bool,
    /// Re-extract features from --traces for each window offset.
    #[arg(long)]
    offset_sweep: bool,
    /// Trace inputs for the parameter sweeps.
    #[arg(long, num_args = 1..)]
    traces: Vec<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    elephant_threshold: Option<usize>,
    #[arg(long)]
    no_elephant_filter: bool,
    #[command(flatten)]
    addfs: AddfsArgs,
    #[command(flatten)]
    peak: PeakArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Datasets; each is named by its file stem.
    #[arg(long, num_args = 1..)]
    datasets: Vec<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// The first selector is tested against each of the others.
    #[arg(long, value_delimiter = ',')]
    selectors: Vec<SelectorKind>,
    #[arg(long, value_parser = config::parse_fractions)]
    fractions: Option<config::Fractions>,
    #[command(flatten)]
    model: ClassifierArgs,
    #[command(flatten)]
    addfs: AddfsArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
