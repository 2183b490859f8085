//! Batch runner. Each subcommand runs one experiment kind from a TOML
//! config; see the README for the key table.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use histmoran::experiments::{run_experiment, ExperimentConfig, ExperimentError, ExperimentKind};
use histmoran::Error;

#[derive(Parser)]
#[command(name = "histmoran", version, about = "Historical Moran model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feynman-Kac duality gaps on random initial laws and dual states.
    DualitySweep(Common),
    /// Genealogical distance of sites 0 and 1 from forward simulation.
    ForwardDistance(Common),
    /// Coalescence time of two tagged sites given their types, from the
    /// transformed backward process.
    ConditionedDistance(Common),
    /// Stationary type law of the common ancestor type.
    CatEquilibrium(Common),
    /// Conditioned genealogical distance survival of the limit chain.
    SurvivalTable(Common),
    /// Derivatives at zero of the distance survival.
    TaylorReport(Common),
    /// Reduced chains against the transformed backward process.
    CrossCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<ExperimentError>().is_some_and(ExperimentError::is_numerical_budget);
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (kind, common) = match cli.command {
        Command::DualitySweep(c) => (ExperimentKind::DualitySweep, c),
        Command::ForwardDistance(c) => (ExperimentKind::ForwardDistance, c),
        Command::ConditionedDistance(c) => (ExperimentKind::ConditionedDistance, c),
        Command::CatEquilibrium(c) => (ExperimentKind::CatEquilibrium, c),
        Command::SurvivalTable(c) => (ExperimentKind::SurvivalTable, c),
        Command::TaylorReport(c) => (ExperimentKind::TaylorReport, c),
        Command::CrossCheck(c) => (ExperimentKind::CrossCheck, c),
    };
    let mut cfg = ExperimentConfig::load(&common.config).context("reading config")?;
    match cfg.experiment {
        Some(k) if k != kind => {
            return Err(Error::Config {
                key: "experiment".into(),
                msg: format!("config names {} but the subcommand is {}", k.name(), kind.name()),
            }
            .into())
        }
        _ => cfg.experiment = Some(kind),
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.output_dir = out;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    let manifest = run_experiment(&cfg)?;
    println!(
        "{}: wrote {} file(s) to {} in {:.2}s",
        manifest.experiment,
        manifest.outputs.len(),
        cfg.output_dir.display(),
        manifest.wall_time_secs
    );
    Ok(())
}
