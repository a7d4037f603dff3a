//! Surrogate stochastic processes for fast particles.
//!
//! The full walk alternates a kick `v ↦ v + R(v, κ)` with a free flight of
//! fixed length. The reduced walks track only the speed through `ξ`, whose
//! diffusive limit is a squared Bessel process.

mod bessel;
mod kick;
mod noise;
mod reduced;
mod walk;

pub use bessel::{bessel_reference, ks_distance, reduced_terminal_samples, run_reduced_ensemble, ReducedEnsemble};
pub use kick::{Kick, KickKind, KickModel, KickRule, SmoothBumpKick, SyntheticKick};
pub use noise::NoiseLaw;
pub use reduced::{
    gradient_gamma, nongradient_gamma, nongradient_reduced_step, reduced_xi_step, xi_floor, ReducedState,
};
pub use walk::{direction_walk_stats, full_walk_step, run_walk_ensemble, DirectionStats, WalkEnsemble, WalkState, BOUNDARY_FLAG};
