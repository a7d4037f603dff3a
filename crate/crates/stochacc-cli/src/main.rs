use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochacc_cli::config::{EngineKind, ExperimentConfig};
use stochacc_cli::report::{render, rows_for};
use stochacc_cli::{run_and_write, CliError, RunRecord};

#[derive(Parser)]
#[command(name = "stochacc", version, about = "Stochastic acceleration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Output root; overrides `output.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Set any config field, e.g. `--override ensemble.v0=[0.5,1]`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn all_overrides(&self) -> Vec<String> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(format!("master_seed={s}"));
        }
        if let Some(w) = self.workers {
            o.push(format!("workers={w}"));
        }
        if let Some(d) = &self.out_dir {
            o.push(format!("output.dir={}", serde_json::Value::String(d.display().to_string())));
        }
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare fitted exponents in run records with their predictions.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
    /// Diffusion and drift coefficients of a smooth scatterer.
    Coeffs {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Line/pair change-of-variables check.
    Changevar {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Energy-transfer moments from the scattering oracle.
    Oracle {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(config: Option<&PathBuf>, engine: Option<EngineKind>, common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut overrides = common.all_overrides();
    let cfg = match config {
        Some(path) => {
            if let Some(e) = engine {
                overrides.insert(0, format!("engine={}", serde_json::to_string(&e).expect("enum serializes")));
            }
            ExperimentConfig::load(path, &overrides)?
        }
        None => {
            let e = engine.expect("subcommands without a file name their engine");
            ExperimentConfig::from_value(ExperimentConfig::skeleton(e), &overrides)?
        }
    };
    Ok(cfg)
}

fn run(config: Option<&PathBuf>, engine: Option<EngineKind>, common: &Common) -> Result<(), CliError> {
    let cfg = load(config, engine, common)?;
    let (rec, dir, files) = run_and_write(&cfg)?;
    eprintln!("{}: {} files in {} ({:.1} s)", cfg.name, files.len(), dir.display(), rec.wall_time_s);
    print!("{}", render(&rows_for(&rec)));
    Ok(())
}

fn report(paths: &[PathBuf]) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for p in paths {
        let rec = RunRecord::load(p).map_err(|e| CliError::Output(e.context(format!("reading {}", p.display()))))?;
        rows.extend(rows_for(&rec));
    }
    print!("{}", render(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, common } => run(Some(config), None, common),
        Command::Report { records } => report(records),
        Command::Coeffs { config, common } => run(config.as_ref(), Some(EngineKind::Coeffs), common),
        Command::Changevar { config, common } => run(config.as_ref(), Some(EngineKind::Changevar), common),
        Command::Oracle { config, common } => run(config.as_ref(), Some(EngineKind::Oracle), common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stochacc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
