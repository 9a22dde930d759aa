//! Benchmark harness CLI for continual novelty detection on tabular
//! intrusion data.
//!
//! Workflow: `synth` writes a drifting synthetic dataset (or bring your own
//! CSV), `prepare` splits it into an evolving task stream, `run` executes
//! the detection pipeline (or a static baseline, or an ablation) over the
//! tasks, and `report` compares results directories.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric
//! failure.

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use acorn_core::error::Error;
use acorn_core::pipeline::BaselineMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::CliConfig;

#[derive(Parser)]
#[command(name = "acorn", version, about = "Continual novelty detection benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; omitted keys take defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed override applied to every component.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,

    /// Print the resolved configuration and exit.
    #[arg(long)]
    show_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineArg {
    Acorn,
    #[value(alias = "static_pca")]
    StaticPca,
    #[value(alias = "static_ae")]
    StaticAe,
}

impl From<BaselineArg> for BaselineMode {
    fn from(value: BaselineArg) -> Self {
        match value {
            BaselineArg::Acorn => BaselineMode::Acorn,
            BaselineArg::StaticPca => BaselineMode::StaticPca,
            BaselineArg::StaticAe => BaselineMode::StaticAe,
        }
    }
}

// the switch names come from the run-config vocabulary
#[allow(clippy::enum_variant_names)]
#[derive(Clone, Copy, Debug, ValueEnum)]
enum AblateArg {
    #[value(alias = "no_metric_loss")]
    NoMetricLoss,
    #[value(alias = "no_recon_loss")]
    NoReconLoss,
    #[value(alias = "no_memories")]
    NoMemories,
    #[value(alias = "no_stored_pseudo_labels")]
    NoStoredPseudoLabels,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drifting dataset CSV.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Split a dataset CSV into an evolving task stream.
    Prepare {
        #[command(flatten)]
        common: CommonArgs,
        /// Input dataset CSV.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Output task directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Train and evaluate over a prepared task stream.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Prepared task directory.
        #[arg(long, value_name = "DIR")]
        tasks: PathBuf,
        /// Results directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Detector to run.
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
        /// Component to ablate (repeatable, acorn mode only).
        #[arg(long, value_enum)]
        ablate: Vec<AblateArg>,
        /// Write per-sample score CSVs.
        #[arg(long)]
        dump_scores: bool,
        /// Write the final extractor parameters as JSON.
        #[arg(long)]
        dump_params: bool,
    },
    /// Summarize results directories into a comparison table and charts.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Report output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Results directories to compare.
        #[arg(required = true, value_name = "RESULTS_DIR")]
        results: Vec<PathBuf>,
    },
}

fn resolve_config(common: &CommonArgs) -> Result<CliConfig, Error> {
    let mut cfg = CliConfig::load(common.config.as_deref())?;
    cfg.apply_seed(common.seed);
    Ok(cfg)
}

fn execute() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Synth { common, out } => {
            let cfg = resolve_config(&common)?;
            if common.show_config {
                println!("{}", cfg.to_pretty_json());
                return Ok(());
            }
            commands::cmd_synth(&cfg, &out, common.force)
        }
        Command::Prepare { common, data, out } => {
            let cfg = resolve_config(&common)?;
            if common.show_config {
                println!("{}", cfg.to_pretty_json());
                return Ok(());
            }
            commands::cmd_prepare(&cfg, &data, &out, common.force)
        }
        Command::Run {
            common,
            tasks,
            out,
            baseline,
            ablate,
            dump_scores,
            dump_params,
        } => {
            let mut cfg = resolve_config(&common)?;
            if let Some(mode) = baseline {
                cfg.run.baseline = mode.into();
            }
            for switch in &ablate {
                match switch {
                    AblateArg::NoMetricLoss => cfg.run.ablate.no_metric_loss = true,
                    AblateArg::NoReconLoss => cfg.run.ablate.no_recon_loss = true,
                    AblateArg::NoMemories => cfg.run.ablate.no_memories = true,
                    AblateArg::NoStoredPseudoLabels => {
                        cfg.run.ablate.no_stored_pseudo_labels = true
                    }
                }
            }
            if dump_scores {
                cfg.run.dump_scores = true;
            }
            if common.show_config {
                println!("{}", cfg.to_pretty_json());
                return Ok(());
            }
            commands::cmd_run(&cfg, &tasks, &out, common.force, dump_params)
        }
        Command::Report {
            common,
            out,
            results,
        } => {
            if common.show_config {
                let cfg = resolve_config(&common)?;
                println!("{}", cfg.to_pretty_json());
                return Ok(());
            }
            report::cmd_report(&results, &out, common.force)
        }
    }
}

fn main() -> ExitCode {
    match execute() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 1,
                Error::Data(_) | Error::Io(_) => 2,
                Error::Numeric(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}
