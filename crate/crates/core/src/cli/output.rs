use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CliError, ScenarioConfig};

/// Hex SHA-256 of the canonical JSON form of `cfg`, excluding `out`, which
/// does not affect results.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let cfg = ScenarioConfig { out: None, ..cfg.clone() };
    hex::encode(Sha256::digest(cfg.to_json().as_bytes()))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    config_hash: &'a str,
    seed: u64,
    wall_clock_s: f64,
    result: &'a T,
}

/// Output directory for one run; created on construction with the
/// effective config echoed into it.
pub struct RunDir {
    pub dir: PathBuf,
    subcommand: &'static str,
    hash: String,
    seed: u64,
    started: std::time::Instant,
}

impl RunDir {
    pub fn create(cfg: &ScenarioConfig, subcommand: &'static str) -> Result<Self, CliError> {
        let dir = cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("bohm-ergo-out").join(subcommand));
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let run = Self {
            dir,
            subcommand,
            hash: config_hash(cfg),
            seed: cfg.seed,
            started: std::time::Instant::now(),
        };
        let path = run.dir.join("config.json");
        fs::write(&path, cfg.to_json() + "\n").map_err(|e| io_error(&path, e))?;
        Ok(run)
    }

    pub fn csv<F>(&self, name: &str, write: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let result = File::create(&path).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        });
        result.map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Writes the report wrapped in the provenance envelope.
    pub fn report<T: Serialize>(&self, result: &T) -> Result<PathBuf, CliError> {
        let env = Envelope {
            tool: "bohm-ergo",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            config_hash: &self.hash,
            seed: self.seed,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            result,
        };
        let path = self.dir.join(format!("{}.json", self.subcommand));
        let text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Numerical(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}
