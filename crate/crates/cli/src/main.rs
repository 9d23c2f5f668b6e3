//! `delineate`: pool building, synthesis, training, prediction, evaluation
//! and plotting from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure (including training divergence).

mod commands;
mod config;
mod files;
mod plot;
mod split;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use delineate_core::eval::EvalMode;
use delineate_core::network::TrainError;

use commands::EvalSource;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(pub String);

#[derive(Parser)]
#[command(name = "delineate", version, about = "Pseudo-synthetic ECG generation and wave delineation")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces every seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write parametric annotated records (stand-in source data).
    GenReference {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        leads: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crop annotated records into segment pools and fit amplitude laws.
    BuildPool {
        #[arg(long)]
        records: Option<PathBuf>,
        /// Defaults to the records directory.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign subjects to folds.
    Split {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        folds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic records with annotations and rule logs.
    Synth {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network; writes a checkpoint and the loss log.
    Train {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Delineate records; leads are combined by majority vote.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint or a directory of predicted annotations.
    Eval {
        #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        mode: Option<EvalMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One SVG per record with shaded P (red), QRS (green) and T (magenta).
    Plot {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.resolve_seeds(cli.seed);
    cfg.validate()?;
    match cli.command {
        Command::GenReference { count, leads, out } => {
            commands::gen_reference(&cfg, &out, count, leads, cli.seed.unwrap_or(cfg.generation.rng_seed))
        }
        Command::BuildPool { records, annotations, out } => commands::build_pool_cmd(&cfg, records, annotations, &out),
        Command::Split { records, folds, out } => commands::split_cmd(&cfg, records, folds, &out),
        Command::Synth { pool, count, out } => commands::synth_cmd(&cfg, pool, count, &out),
        Command::Train { pool, records, annotations, out } => commands::train_cmd(&cfg, pool, records, annotations, &out),
        Command::Predict { checkpoint, records, out } => commands::predict_cmd(&cfg, &checkpoint, records, &out),
        Command::Eval { checkpoint, predictions, records, annotations, mode, out } => {
            let source = match (checkpoint, predictions) {
                (Some(c), _) => EvalSource::Checkpoint(c),
                (None, Some(p)) => EvalSource::Predictions(p),
                (None, None) => unreachable!("clap requires one source"),
            };
            let mode = mode.unwrap_or(cfg.evaluation.mode);
            commands::eval_cmd(&cfg, source, records, annotations, mode, out.as_deref())
        }
        Command::Plot { records, annotations, out } => commands::plot_cmd(&cfg, records, annotations, &out),
    }
}

fn core_code(e: &delineate_core::Error) -> u8 {
    match e {
        delineate_core::Error::Numeric(_) => 3,
        delineate_core::Error::Config(_) => 1,
        _ => 2,
    }
}

/// Exit code of the first classifiable error in the chain.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<DataError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<delineate_core::Error>() {
            return core_code(e);
        }
        if let Some(e) = cause.downcast_ref::<TrainError>() {
            return match e {
                TrainError::Diverged { .. } => 3,
                TrainError::Failed(inner) => core_code(inner),
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
