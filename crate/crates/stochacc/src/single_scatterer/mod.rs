//! One passage through a smooth, compactly supported, time-dependent scatterer:
//! a direct RK4 oracle, the high-speed momentum and energy expansions, and
//! Monte Carlo averages of the energy transfer.

mod expansion;
mod integrate;
mod moments;
mod potential;

pub use expansion::{beta0_line_integral, beta1_line_integral, energy_transfer_expansion, momentum_transfer_expansion, ExpansionCoeffs};
pub use integrate::{
    calibrate_step, default_step, integrate_converged, integrate_fixed, integrate_scattering, regime_speed,
    ScatterOutcome, ScatterParams, HALVING_TOL, OUTER_RADIUS,
};
pub use moments::{averaged_energy_moments, pairing_check, EnergyMoments, MomentOptions, PairingCheck};
pub use potential::{bump, bump_grad_factor, BumpPotential, ForceField, SmoothScatterer, SwirlField, SUPPORT_RADIUS};
