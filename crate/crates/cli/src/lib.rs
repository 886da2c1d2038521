//! Command-line driver: configuration, the `simulate`, `sweep`, `ml` and
//! `scaling` subcommands, CSV/SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{cmd_ml, cmd_scaling, cmd_simulate, cmd_sweep, MlAction};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult, Outcome};

#[derive(Debug, Parser)]
#[command(name = "qwloc", version, about = "Localization transition of quantum walks with classical randomness")]
pub struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    pub plots: Toggle,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve one walk and write its distribution and diagnostics.
    Simulate,
    /// Final observables across a randomness grid, with manual estimates.
    Sweep,
    /// Train, scan, study sample sizes, or retrain on lattice regions.
    Ml {
        #[arg(value_enum)]
        action: MlArg,
    },
    /// Critical value versus system size and its power-law exponents.
    Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MlArg {
    Train,
    Scan,
    Samplesize,
    Regions,
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli, cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let plots = cli.plots == Toggle::On;
    match cli.command {
        Command::Simulate => cmd_simulate(cfg, &cli.out, plots),
        Command::Sweep => cmd_sweep(cfg, &cli.out, plots),
        Command::Scaling => cmd_scaling(cfg, &cli.out, plots),
        Command::Ml { action } => {
            let action = match action {
                MlArg::Train => MlAction::Train,
                MlArg::Scan => MlAction::Scan,
                MlArg::Samplesize => MlAction::SampleSize,
                MlArg::Regions => MlAction::Regions,
            };
            cmd_ml(cfg, action, &cli.out, plots)
        }
    }
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Process exit code for a parsed command line.
pub fn run(cli: &Cli) -> i32 {
    let result = resolve_config(cli).and_then(|cfg| with_threads(cli.threads, || execute(cli, &cfg))?);
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("qwloc: {e}");
            e.exit_code()
        }
    }
}
