//! Monte Carlo laboratory for stochastic acceleration of fast particles in
//! time-dependent random scatterer fields.
//!
//! * [`lorentz_gas`]: exact event-driven lattice simulation with flat disks.
//! * [`single_scatterer`]: smooth-scatterer integration and high-speed expansions.
//! * [`random_walk`]: momentum-space surrogate walks and the squared Bessel reference.
//! * [`coefficients`]: diffusion and drift coefficients by quadrature.
//! * [`analysis`]: checkpointed ensemble statistics and power-law fits.
//! * [`ensemble`]: deterministic parallel ensemble drivers.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod analysis;
pub mod coefficients;
pub mod ensemble;
pub mod error;
pub mod lorentz_gas;
pub mod quadrature;
pub mod random_walk;
pub mod scalar;
pub mod seeding;
pub mod single_scatterer;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Real;
pub use vector::{Rotation, Vector};

pub type Vec1 = Vector<f64, 1>;
pub type Vec2 = Vector<f64, 2>;
pub type Vec3 = Vector<f64, 3>;
pub type ChainField = lorentz_gas::ScattererField<f64, lorentz_gas::Chain<f64>>;
pub type HexField = lorentz_gas::ScattererField<f64, lorentz_gas::Hexagonal<f64>>;
pub type Series = analysis::EnsembleSeries<f64>;
pub type Fit = analysis::PowerLawFit<f64>;
