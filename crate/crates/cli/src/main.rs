//! `compmove`: experiment harness for skeleton-based compensatory-movement
//! detection. Generates synthetic rehab data, preprocesses it, trains the
//! graph-convolution/LSTM/attention classifier and the classical baselines,
//! and reproduces the comparison and ablation experiment tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure, 5 i/o error.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use compmove_core::{Error, ErrorKind, Result};

use commands::Format;
use config::{RunConfig, SplitBy};

#[derive(Parser)]
#[command(name = "compmove", version, about = "Compensatory-movement detection experiments")]
struct Cli {
    /// TOML run configuration; omitted sections fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed driving generation, splitting, training, and baselines.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Stdout rendering for report-producing commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// How the train/test split groups sequences.
    #[arg(long, global = true, value_enum)]
    split_by: Option<SplitBy>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the labeled dataset and its provenance sidecar.
    GenerateData,
    /// Split and run the conditioning chain; write normalized sequences and
    /// fitted statistics.
    Preprocess {
        /// Dataset JSONL; defaults to <out>/dataset.jsonl.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train the classifier on the train split and save model + stats.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Load a saved model and score it on the held-out split.
    Evaluate {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model directory; defaults to <out>/model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train deep model and baselines on one split; report all rows.
    Compare {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated subset of SVM, KNN, RF, GCN-LSTM-ATT.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Train all architecture variants on identical tensors; report rows.
    Ablate {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Finite-difference audit of the model gradients on a tiny instance.
    GradientCheck {
        /// Negative control: corrupt one adjoint so the check must fail.
        #[arg(long)]
        corrupt: bool,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(split_by) = cli.split_by {
        cfg.split_by = split_by;
    }
    cfg.propagate_seed();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.cmd {
        Cmd::GenerateData => commands::cmd_generate_data(&cfg),
        Cmd::Preprocess { data } => commands::cmd_preprocess(&cfg, data),
        Cmd::Train { data } => commands::cmd_train(&cfg, data),
        Cmd::Evaluate { data, model } => commands::cmd_evaluate(&cfg, cli.format, data, model),
        Cmd::Compare { data, models } => commands::cmd_compare(&cfg, cli.format, data, models),
        Cmd::Ablate { data } => commands::cmd_ablate(&cfg, cli.format, data),
        Cmd::GradientCheck { corrupt } => commands::cmd_gradient_check(&cfg, *corrupt),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
        ErrorKind::Io => 5,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
