//! Command-line scenario runner.
//!
//! One scenario per process. Every subcommand writes `config.json` (the
//! effective configuration after flag overrides) and a JSON report into the
//! output directory; re-running with that file reproduces every output except
//! the `wall_clock_s` field.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{ScenarioConfig, SystemName, PRESETS};
pub use output::config_hash;

pub const LOG_ENV: &str = "BOHM_ERGO_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bohm-ergo", version, about = "Two-particle Bohmian double-slit scenarios and ergodic analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario JSON file.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario (natural, constrained, constrained_sameside, mirror,
    /// full_window, gibbs_only, electron).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Ensemble size for both ensembles.
    #[arg(long, global = true, value_name = "COUNT")]
    pub n: Option<usize>,
    /// Model kind (double_slit, double_slit_free, asymmetric_slits, plane_wave).
    #[arg(long, global = true, value_name = "NAME")]
    pub model: Option<String>,
    /// Fixture system for `ergodic` (rotation, two_piece, bohm_pair).
    #[arg(long, global = true, value_name = "NAME")]
    pub system: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate an ensemble; write trajectories and drift/crossing statistics.
    Simulate,
    /// Compare the quadrature, Gibbs and constrained joint detection probabilities.
    Detect,
    /// Time-mean versus space-mean analysis of a fixture system.
    Ergodic,
    /// Apparatus feasibility checks.
    Design,
    /// Chi-square test of an evolved Gibbs ensemble against |Psi|^2.
    Equivariance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Detect => "detect",
            Command::Ergodic => "ergodic",
            Command::Design => "design",
            Command::Equivariance => "equivariance",
        }
    }

    fn default_preset(self) -> &'static str {
        match self {
            Command::Detect => "constrained_sameside",
            Command::Design => "electron",
            _ => "natural",
        }
    }
}

impl Cli {
    /// The scenario after applying flag overrides.
    pub fn effective_config(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => config::preset(name)?,
            (None, None) => config::preset(self.command.default_preset())?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.n {
            cfg.gibbs.n = n;
            cfg.constrained.n = n;
        }
        if let Some(name) = &self.model {
            cfg.model.model_kind = config::parse_model(name)?;
        }
        if let Some(name) = &self.system {
            cfg.ergodic.system = SystemName::parse(name).ok_or_else(|| {
                CliError::Config(format!("unknown system `{name}`; available: rotation, two_piece, bohm_pair"))
            })?;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        Ok(cfg)
    }
}

/// Parses `args` and runs the scenario; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bohm-ergo {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.effective_config()?;
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| commands::dispatch(cli.command, &cfg))
}
