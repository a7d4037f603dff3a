//! Experiment configuration: JSON schema, overrides and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stochacc::analysis::{ForceClass, Observable, WindowPolicy};
use stochacc::lorentz_gas::{Chain, CouplingLaw, Hexagonal, TimeProfile};
use stochacc::random_walk::{KickKind, NoiseLaw};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("at `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Lattice,
    Walk,
    Oracle,
    Coeffs,
    Changevar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    F1,
    F2,
    F3,
}

impl ProfileChoice {
    pub fn build(self) -> TimeProfile<f64> {
        match self {
            Self::F1 => TimeProfile::F1,
            Self::F2 => TimeProfile::F2,
            Self::F3 => TimeProfile::F3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingChoice {
    UniformZeroHalf,
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl CouplingChoice {
    pub fn build(self) -> CouplingLaw<f64> {
        match self {
            Self::UniformZeroHalf => CouplingLaw::UniformZeroHalf,
            Self::Fixed { value } => CouplingLaw::Fixed(value),
            Self::Uniform { lo, hi } => CouplingLaw::Uniform { lo, hi },
        }
    }

    /// Symmetric about zero, so `c ↦ −c` leaves the law unchanged.
    pub fn is_symmetric(self) -> bool {
        match self {
            Self::UniformZeroHalf => false,
            Self::Fixed { value } => value == 0.0,
            Self::Uniform { lo, hi } => lo == -hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub force: ForceClass,
    pub profile: ProfileChoice,
    pub coupling: CouplingChoice,
    /// Disk radius; 0.45 on the hexagonal lattice and 0.25 on the chain when absent.
    pub y_star: Option<f64>,
    /// Amplitude of the smooth scatterer used by the oracle, coefficient and expansion engines.
    pub amplitude: f64,
    pub eta_star: f64,
    pub gamma: Option<f64>,
    pub kick: KickKind,
    pub noise: NoiseLaw,
    /// `D` or `D′` of the synthetic kick.
    pub scale: f64,
    pub deflection: f64,
    /// Bessel dimension; `2γ + 1` when absent.
    pub delta: Option<f64>,
    pub max_internal_bounces: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            force: ForceClass::Gradient,
            profile: ProfileChoice::F1,
            coupling: CouplingChoice::UniformZeroHalf,
            y_star: None,
            amplitude: 1.0,
            eta_star: 1.0,
            gamma: None,
            kick: KickKind::SyntheticBeta1,
            noise: NoiseLaw::Normal,
            scale: 1.0,
            deflection: 1.0,
            delta: None,
            max_internal_bounces: 10_000,
        }
    }
}

impl ModelConfig {
    pub fn y_star_for(&self, dimension: usize) -> f64 {
        self.y_star.unwrap_or(if dimension == 1 { 0.25 } else { 0.45 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trajectories: u64,
    pub v0: Vec<f64>,
    pub max_collisions: Option<u64>,
    pub max_time: Option<f64>,
    pub field_per_trajectory: bool,
    /// Walks reflected at the reduced-variable floor on more than this fraction of steps are excluded.
    pub boundary_limit: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 1000,
            v0: vec![1.0],
            max_collisions: Some(100_000),
            max_time: None,
            field_per_trajectory: true,
            boundary_limit: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub per_decade: usize,
    pub collision_start: f64,
    /// Defaults to `ensemble.max_collisions`.
    pub collision_end: Option<f64>,
    pub time_start: f64,
    /// Defaults to `ensemble.max_time`; no time grid when both are absent.
    pub time_end: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { per_decade: 8, collision_start: 1.0, collision_end: None, time_start: 1.0, time_end: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverConfig {
    pub observable: Observable,
    pub exponent: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window: WindowPolicy<f64>,
    pub crossover: Option<CrossoverConfig>,
    pub decorrelation: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { window: WindowPolicy::LastDecade, crossover: None, decorrelation: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    Full,
    Reduced,
    Bessel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub mode: WalkMode,
    /// Starting reduced variable for reduced and Bessel modes; taken from `v0` when absent.
    pub xi0: Option<f64>,
    pub bessel_gammas: Vec<f64>,
    pub bessel_steps: u64,
    pub bessel_samples: u64,
    pub em_steps: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            mode: WalkMode::Full,
            xi0: None,
            bessel_gammas: vec![-1.0 / 6.0, 0.0, 1.0 / 6.0],
            bessel_steps: 100_000,
            bessel_samples: 10_000,
            em_steps: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub speeds: Vec<f64>,
    pub n_samples: u64,
    pub phase_strata: usize,
    pub antithetic_coupling: bool,
    pub step: Option<f64>,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { speeds: vec![5.0, 10.0, 20.0], n_samples: 20_000, phase_strata: 8, antithetic_coupling: false, step: None, tol: 1e-11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub kernel_samples: u64,
    pub line_samples: u64,
    pub phase_points: usize,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { kernel_samples: 1_000_000, line_samples: 20_000, phase_points: 4 }
    }
}

/// Test functions `f(y, y′, ‖y−y′‖)` for the change-of-variables check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    Gaussian,
    Separation,
    Anisotropic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChangeVarConfig {
    pub n_samples: u64,
    pub functions: Vec<TestFunction>,
}

impl Default for ChangeVarConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000_000,
            functions: vec![TestFunction::Constant, TestFunction::Gaussian, TestFunction::Separation, TestFunction::Anisotropic],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "runs".into() }
    }
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub engine: EngineKind,
    pub dimension: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub coeffs: CoeffsConfig,
    #[serde(default)]
    pub changevar: ChangeVarConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Sets `key` (dot-separated) in a JSON object tree, creating objects on the way.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| ConfigError::Override(assignment.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(assignment.into()));
    }
    // Anything that is not valid JSON is taken as a bare string.
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            _ => {
                return Err(ConfigError::Field {
                    path: parts[..i].join("."),
                    message: "cannot set a field inside a non-object value".into(),
                })
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    unreachable!("split always yields at least one part")
}

impl ExperimentConfig {
    /// Parses a JSON document after applying `overrides`, then validates.
    pub fn from_value(mut root: Value, overrides: &[String]) -> Result<Self, ConfigError> {
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: Self = serde_path_to_error::deserialize(root).map_err(|e| ConfigError::Field {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let root: Value = serde_json::from_str(text)?;
        Self::from_value(root, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_str(&text, overrides)
    }

    /// Minimal config for a subcommand invoked without a file.
    pub fn skeleton(engine: EngineKind) -> Value {
        let name = serde_json::to_value(engine).expect("enum serializes");
        serde_json::json!({ "name": name, "engine": engine, "dimension": 2 })
    }

    fn invalid(msg: impl Into<String>) -> ConfigError {
        ConfigError::Invalid(msg.into())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Self::invalid(format!("dimension must be 1, 2 or 3 (got {})", self.dimension)));
        }
        if self.workers == 0 {
            return Err(Self::invalid("workers must be positive"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Self::invalid("name must be a non-empty file-name component"));
        }
        let m = &self.model;
        let e = &self.ensemble;
        if !(m.eta_star > 0.0 && m.amplitude.is_finite() && m.scale > 0.0 && m.deflection >= 0.0) {
            return Err(Self::invalid("model needs eta_star > 0, scale > 0 and deflection >= 0"));
        }
        if let CouplingChoice::Uniform { lo, hi } = m.coupling {
            if !(lo <= hi) {
                return Err(Self::invalid("coupling.lo must not exceed coupling.hi"));
            }
        }
        if self.grid.per_decade == 0 {
            return Err(Self::invalid("grid.per_decade must be positive"));
        }
        match self.engine {
            EngineKind::Lattice | EngineKind::Walk => {
                if e.n_trajectories == 0 {
                    return Err(Self::invalid("ensemble.n_trajectories must be positive"));
                }
                if e.v0.is_empty() || e.v0.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Self::invalid("ensemble.v0 must be a non-empty list of positive speeds"));
                }
                if e.max_collisions.is_none() && e.max_time.is_none() {
                    return Err(Self::invalid("ensemble needs max_collisions or max_time"));
                }
            }
            _ => {}
        }
        let centered = matches!(self.engine, EngineKind::Oracle | EngineKind::Coeffs)
            || (self.engine == EngineKind::Walk && m.kick == KickKind::SmoothExpansion);
        if centered && m.force == ForceClass::NonGradient && !m.coupling.is_symmetric() {
            return Err(Self::invalid("non-gradient coefficients need a coupling law symmetric about zero"));
        }
        match self.engine {
            EngineKind::Lattice => {
                if m.force != ForceClass::Gradient {
                    return Err(Self::invalid("the lattice engine only has gradient scatterers"));
                }
                let y = m.y_star_for(self.dimension);
                let ok = match self.dimension {
                    1 => Chain::<f64>::new(y).map(|_| ()),
                    2 => Hexagonal::<f64>::new(y).map(|_| ()),
                    _ => return Err(Self::invalid("lattice engine supports dimensions 1 and 2")),
                };
                ok.map_err(|err| ConfigError::Field { path: "model.y_star".into(), message: err.to_string() })?;
                if self.analysis.decorrelation && self.dimension < 2 {
                    return Err(Self::invalid("direction decorrelation needs dimension >= 2"));
                }
            }
            EngineKind::Walk => {
                if m.kick == KickKind::FlatDiskExact && self.dimension > 2 {
                    return Err(Self::invalid("flat_disk_exact kicks need a lattice, dimensions 1 and 2"));
                }
                if m.kick == KickKind::SmoothExpansion && m.force != ForceClass::Gradient {
                    return Err(Self::invalid("smooth_expansion kicks are defined for the gradient bump only"));
                }
                if self.walk.mode == WalkMode::Bessel && self.walk.bessel_gammas.is_empty() {
                    return Err(Self::invalid("walk.bessel_gammas must not be empty"));
                }
            }
            EngineKind::Oracle => {
                if self.oracle.speeds.is_empty() || self.oracle.speeds.iter().any(|&v| v <= 0.0) {
                    return Err(Self::invalid("oracle.speeds must be positive"));
                }
                if self.oracle.antithetic_coupling && !m.coupling.is_symmetric() {
                    return Err(Self::invalid("oracle.antithetic_coupling needs a coupling law symmetric about zero"));
                }
            }
            EngineKind::Coeffs => {}
            EngineKind::Changevar => {
                if self.dimension < 2 {
                    return Err(Self::invalid("changevar needs dimension 2 or 3"));
                }
                if self.changevar.functions.is_empty() {
                    return Err(Self::invalid("changevar.functions must not be empty"));
                }
            }
        }
        Ok(())
    }
}
