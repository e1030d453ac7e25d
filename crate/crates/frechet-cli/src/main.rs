//! `lfr` — local Fréchet regression toolkit.
//!
//! Subcommands: `simulate` (generate a scenario dataset), `fit` (fitted
//! curves per estimator), `benchmark` (MISE sweep over bandwidths),
//! `region` (bootstrap confidence region). All options come from a single
//! JSON config; see the repository README for the schema.
//!
//! Exit codes: 0 success, 2 config/validation error, 3 numeric failure,
//! 4 I/O error.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use frechet::FrechetError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: String) -> Self {
        CliError::Config(msg)
    }

    pub fn io(msg: String) -> Self {
        CliError::Io(msg)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<FrechetError> for CliError {
    fn from(e: FrechetError) -> Self {
        match e {
            FrechetError::InvalidInput(_)
            | FrechetError::OffManifold { .. }
            | FrechetError::NotTangent { .. } => CliError::Config(e.to_string()),
            FrechetError::DegenerateWindow { .. }
            | FrechetError::EmptyWindow { .. }
            | FrechetError::Numeric { .. }
            | FrechetError::InsufficientData(_) => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "lfr", version, about = "Local Fréchet regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the parallelism level from the config.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset CSV produced by `simulate`.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario dataset.
    Simulate(CommonArgs),
    /// Fit the configured estimators on a dataset over the predictor grid.
    Fit(DataArgs),
    /// Run the MISE benchmark over the bandwidth grid.
    Benchmark(CommonArgs),
    /// Build a bootstrap confidence region at the configured test point.
    Region(DataArgs),
}

fn load(common: &CommonArgs) -> Result<config::RunConfig, CliError> {
    let mut cfg = config::RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
        cfg.master_seed = Some(cfg.master_seed.unwrap_or(seed));
    }
    if let Some(p) = common.parallelism {
        cfg.parallelism = p.max(1);
    }
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(common) => {
            let cfg = load(common)?;
            commands::cmd_simulate(&cfg, &common.out)
        }
        Command::Fit(args) => {
            let cfg = load(&args.common)?;
            commands::cmd_fit(&cfg, &args.data, &args.common.out)
        }
        Command::Benchmark(common) => {
            let cfg = load(common)?;
            commands::cmd_benchmark(&cfg, &common.out)
        }
        Command::Region(args) => {
            let cfg = load(&args.common)?;
            commands::cmd_region(&cfg, &args.data, &args.common.out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
