//! Run records and their on-disk form: one summary JSON plus one CSV per series.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochacc::analysis::{Decorrelation, EnsembleSeries, GridKind, Observable, PowerLawFit};
use stochacc::coefficients::{ChangeVarResult, GradientCoeffs, NonGradientCoeffs};
use stochacc::ensemble::Counters;
use stochacc::single_scatterer::EnergyMoments;

use crate::config::{ExperimentConfig, TestFunction};

/// One fitted exponent; `fit` is absent when the data did not allow a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub grid: GridKind,
    pub observable: Observable,
    pub fit: Option<PowerLawFit<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    /// `n`, `tau` or `reduced`.
    pub label: String,
    pub series: EnsembleSeries<f64>,
}

/// Everything measured at one initial speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedRun {
    pub v0: f64,
    pub counters: Counters,
    pub series: Vec<NamedSeries>,
    pub fits: Vec<FitRow>,
}

impl SpeedRun {
    pub fn series(&self, label: &str) -> Option<&EnsembleSeries<f64>> {
        self.series.iter().find(|s| s.label == label).map(|s| &s.series)
    }

    pub fn fit(&self, grid: GridKind, obs: Observable) -> Option<&FitRow> {
        self.fits.iter().find(|f| f.grid == grid && f.observable == obs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub v0: f64,
    pub n_star: Option<f64>,
    pub tau_star: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverSummary {
    pub observable: Observable,
    pub exponent: f64,
    pub tol: f64,
    pub rows: Vec<CrossoverRow>,
    pub n_star_fit: Option<PowerLawFit<f64>>,
    pub tau_star_fit: Option<PowerLawFit<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecorrelationSummary {
    pub rows: Vec<(f64, Decorrelation<f64>)>,
    pub m_star_fit: Option<PowerLawFit<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselRow {
    pub gamma: f64,
    pub delta: f64,
    pub xi0: f64,
    pub steps: u64,
    pub samples: u64,
    pub ks: f64,
    pub walk_mean: f64,
    pub reference_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CoeffsSummary {
    Gradient(GradientCoeffs<f64>),
    NonGradient(NonGradientCoeffs<f64>),
}

impl CoeffsSummary {
    /// `(D², stderr, B, stderr)` or the primed analogue.
    pub fn diffusion_drift(&self) -> (f64, f64, f64, f64) {
        match self {
            Self::Gradient(g) => (g.d2.value, g.d2.stderr, g.b.value, g.b.stderr),
            Self::NonGradient(n) => (n.d2p.value, n.d2p.stderr, n.bp.value, n.bp.stderr),
        }
    }
}

/// Oracle moments at one speed, scaled to the orders that carry the coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub moments: EnergyMoments<f64>,
    /// `⟨ΔE⟩‖v‖⁴` (gradient) or `⟨ΔE⟩‖v‖²` (non-gradient).
    pub drift: f64,
    pub drift_stderr: f64,
    /// `⟨ΔE²⟩‖v‖²` (gradient) or `⟨ΔE²⟩` (non-gradient).
    pub diffusion: f64,
    pub diffusion_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeVarRow {
    pub function: TestFunction,
    pub result: ChangeVarResult<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_s: f64,
    #[serde(default)]
    pub runs: Vec<SpeedRun>,
    #[serde(default)]
    pub crossover: Option<CrossoverSummary>,
    #[serde(default)]
    pub decorrelation: Option<DecorrelationSummary>,
    #[serde(default)]
    pub bessel: Vec<BesselRow>,
    #[serde(default)]
    pub coeffs: Option<CoeffsSummary>,
    #[serde(default)]
    pub oracle: Vec<OracleRow>,
    #[serde(default)]
    pub changevar: Vec<ChangeVarRow>,
}

impl RunRecord {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            runs: Vec::new(),
            crossover: None,
            decorrelation: None,
            bessel: Vec::new(),
            coeffs: None,
            oracle: Vec::new(),
            changevar: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes `record.json` and the series CSVs under `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let summary = dir.join("record.json");
        let mut f = std::fs::File::create(&summary)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        written.push(summary);
        for (i, run) in self.runs.iter().enumerate() {
            for s in &run.series {
                let path = dir.join(format!("run{i:02}_{}.csv", s.label));
                std::fs::write(&path, series_csv(&s.series)?)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// `checkpoint, n_samples, <obs>_mean, <obs>_stderr, …` with shortest round-trip decimals.
pub fn series_csv(series: &EnsembleSeries<f64>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["checkpoint".to_string(), "n_samples".to_string()];
    for o in &series.observables {
        header.push(format!("{}_mean", o.name()));
        header.push(format!("{}_stderr", o.name()));
    }
    w.write_record(&header)?;
    for (x, row) in series.grid.points.iter().zip(&series.stats) {
        let count = row.first().map_or(0, |s| s.count);
        let mut rec = vec![x.to_string(), count.to_string()];
        for s in row {
            if s.count == 0 {
                rec.push(String::new());
                rec.push(String::new());
            } else {
                rec.push(s.mean.to_string());
                rec.push(s.stderr().to_string());
            }
        }
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}
