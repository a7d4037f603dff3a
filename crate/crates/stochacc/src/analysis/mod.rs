//! Ensemble statistics at log-spaced checkpoints and power-law exponent extraction.

mod accumulator;
mod crossover;
mod decorrelation;
mod fit;
mod grid;
mod predictions;

pub use accumulator::{kinematic_values, EnsembleSeries, Observable, TrajectoryBuffer, Welford};
pub use crossover::{detect_crossover, local_slopes, Crossover};
pub use decorrelation::{direction_decorrelation, initial_slope, Decorrelation, LINEAR_FLOOR, MAX_LAG};
pub use fit::{fit_exponent, fit_power_law, PowerLawFit, WindowPolicy, MIN_FIT_POINTS};
pub use grid::{CheckpointGrid, GridKind};
pub use predictions::{predictions, ForceClass, Prediction};
