use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid disk radius {y_star}: must lie in ({lo}, {hi}) for this lattice")]
    InvalidRadius { y_star: f64, lo: f64, hi: f64 },
    #[error("no disk hit within distance {limit} (finite-horizon bound violated)")]
    HorizonViolation { limit: f64 },
    #[error("particle still trapped after {bounces} internal bounces")]
    TrappedUnresolved { bounces: usize },
    #[error("velocity magnitude {speed} below resolution")]
    DegenerateVelocity { speed: f64 },
    #[error("speed {speed} outside the perturbative regime (needs v^2 >= {required})")]
    RegimeViolation { speed: f64, required: f64 },
    #[error("step halving changed the result by {change:e} (tolerance {tol:e})")]
    NoConvergence { change: f64, tol: f64 },
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
    #[error("negative D^2 estimate {value}")]
    NegativeD2 { value: f64 },
    #[error("series grids differ")]
    GridMismatch,
    #[error("insufficient data: {needed} points required, {found} available")]
    InsufficientData { needed: usize, found: usize },
    #[error("local slope never settles within tolerance")]
    NoCrossover,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
