//! Command-line front end: reads a JSON run config, runs one workflow and
//! writes field binaries, CSV probe tables, `summary.json` and
//! `manifest.json` into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{Command, RunConfig, SCHEMA_VERSION};
pub use error::CliError;
pub use run::{run, Outcome};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "BELTRAMI_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "beltrami",
    version,
    about = "Solve, recover and probe planar Beltrami equations"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Path of the JSON run config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed; overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Loads, validates and runs a config; returns the process exit code.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let base = cli.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let validated = cfg.validate(cli.command, &base)?;
    run(cli.command, &validated, &out)
}

/// Builds the global thread pool from `BELTRAMI_THREADS` when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!("{THREADS_ENV}={raw} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))
}
