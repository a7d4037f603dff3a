//! Diffusion and drift coefficients of the energy, by quadrature.
//!
//! Scatterer coefficients come from two independent routes each: a
//! double-space kernel integral and the average of squared line integrals.
//! Homogeneous random fields reduce to one-dimensional radial moments.

mod changevar;
mod geometry;
mod homogeneous;
mod scatterer;

pub use changevar::{changevar_check, ChangeVarResult};
pub use geometry::{ball_volume, impact_volume, pair_weight, phase_points, sample_pair, sphere_area, Pair};
pub use homogeneous::{homogeneous_coeffs, Correlation, CorrelationKind, HomogeneousCoeffs};
pub use scatterer::{gradient_coeffs, nongradient_coeffs, CoeffOptions, Estimate, GradientCoeffs, NonGradientCoeffs};
