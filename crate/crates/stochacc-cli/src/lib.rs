//! Experiment runner for the `stochacc` library: JSON configs in, JSON records and CSV series out.

pub mod config;
pub mod engine;
pub mod record;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, EngineKind, ExperimentConfig};
pub use engine::execute;
pub use record::RunRecord;

/// Failure categories, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("engine failure: {0}")]
    Engine(#[from] stochacc::Error),
    #[error("output error: {0}")]
    Output(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Engine(_) => 3,
            Self::Output(_) => 4,
        }
    }
}

/// Runs `cfg` and writes its record under `<output.dir>/<name>/`.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(RunRecord, PathBuf, Vec<PathBuf>), CliError> {
    let rec = execute(cfg)?;
    let dir = Path::new(&cfg.output.dir).join(&cfg.name);
    let files = rec.write(&dir)?;
    Ok((rec, dir, files))
}
