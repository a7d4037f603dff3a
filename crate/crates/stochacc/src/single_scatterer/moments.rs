use serde::{Deserialize, Serialize};

use super::expansion::energy_transfer_expansion;
use super::integrate::{calibrate_step, integrate_fixed, ScatterParams};
use super::potential::SmoothScatterer;
use crate::analysis::Welford;
use crate::ensemble::{chunked_reduce, CHUNK};
use crate::error::{Error, Result};
use crate::lorentz_gas::{CouplingLaw, Phase};
use crate::scalar::Real;
use crate::seeding::stream;
use crate::vector::{Rotation, Vector};

/// Sampling plan for [`averaged_energy_moments`].
///
/// Each sample draws one `κ = (b, M, φ, c)` and averages `ΔE` over the
/// enabled symmetry partners, all of which leave the averaged law unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub n_samples: u64,
    /// Strata for the first phase component.
    pub phase_strata: usize,
    /// Pair `φ` with `φ + ½`.
    pub antithetic_phase: bool,
    /// Pair `v` with `−v`.
    pub time_reversal: bool,
    /// Pair `c` with `−c`; only valid for symmetric coupling laws.
    pub antithetic_coupling: bool,
    /// Fixed RK4 step; calibrated to `tol` when absent.
    pub step: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            phase_strata: 8,
            antithetic_phase: true,
            time_reversal: true,
            antithetic_coupling: false,
            step: None,
            tol: 1e-11,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyMoments<T> {
    pub speed: T,
    pub mean: T,
    pub stderr_mean: T,
    pub mean_sq: T,
    pub stderr_sq: T,
    pub samples: u64,
    pub evaluations: u64,
    pub step: T,
    /// Events whose in-support steps violated the crossing-time bounds.
    pub crossing_violations: u64,
}

#[derive(Clone)]
struct Acc<T> {
    mean: Welford<T>,
    sq: Welford<T>,
    evals: u64,
    violations: u64,
    err: Option<Error>,
}

fn max_coupling<T: Real>(law: &CouplingLaw<T>) -> T {
    (0..=64).map(|i| law.quantile(T::lit((i as f64 / 64.0).min(1.0 - 1e-12))).abs()).fold(T::zero(), T::max)
}

fn shifted<T: Real>(phi: &Phase<T>) -> Phase<T> {
    let half = T::lit(0.5);
    [(phi[0] + half).fract(), (phi[1] + half).fract()]
}

/// Monte Carlo estimate of `⟨ΔE⟩` and `⟨ΔE²⟩` at speed `speed` along the first axis.
///
/// `b` is uniform in the `(d−1)`-ball of radius ½ orthogonal to the velocity,
/// `M` is Haar distributed, `φ` uniform on the torus and `c` drawn from `coupling`.
pub fn averaged_energy_moments<T: Real, const D: usize>(
    speed: T,
    s: &SmoothScatterer<T, D>,
    coupling: &CouplingLaw<T>,
    opts: &MomentOptions,
) -> Result<EnergyMoments<T>> {
    let h = match opts.step {
        Some(h) => T::lit(h),
        None => calibrate_step(speed, s, max_coupling(coupling), opts.tol)?,
    };
    let e = Vector::<T, D>::axis(0);
    let strata = opts.phase_strata.max(1) as u64;
    let init = || Acc { mean: Welford::new(), sq: Welford::new(), evals: 0, violations: 0, err: None };
    let acc = chunked_reduce(
        opts.n_samples,
        CHUNK,
        opts.workers,
        init,
        |acc, i| {
            if acc.err.is_some() {
                return;
            }
            let mut rng = stream(opts.seed, i);
            let mut p = ScatterParams::sample(&e, coupling, &mut rng);
            p.phase[0] = (T::lit((i % strata) as f64) + p.phase[0]) / T::lit(strata as f64);
            let mut phases = vec![p.phase];
            if opts.antithetic_phase {
                phases.push(shifted(&p.phase));
            }
            let mut vels = vec![e * speed];
            if opts.time_reversal {
                vels.push(-(e * speed));
            }
            let mut cs = vec![p.c];
            if opts.antithetic_coupling {
                cs.push(-p.c);
            }
            let (mut m1, mut m2, mut k) = (T::zero(), T::zero(), 0usize);
            for phase in &phases {
                for v in &vels {
                    for &c in &cs {
                        let q = ScatterParams { phase: *phase, c, ..p };
                        match integrate_fixed(v, &q, s, h) {
                            Ok(out) => {
                                m1 += out.delta_e;
                                m2 += out.delta_e * out.delta_e;
                                k += 1;
                                if !out.crossing_bounds_hold {
                                    acc.violations += 1;
                                }
                            }
                            Err(err) => {
                                acc.err = Some(err);
                                return;
                            }
                        }
                    }
                }
            }
            let kk = T::from_usize_lossy(k);
            acc.mean.push(m1 / kk);
            acc.sq.push(m2 / kk);
            acc.evals += k as u64;
        },
        |a, b| {
            if a.err.is_none() {
                a.err = b.err;
            }
            a.mean.merge(&b.mean);
            a.sq.merge(&b.sq);
            a.evals += b.evals;
            a.violations += b.violations;
        },
    )?;
    if let Some(err) = acc.err {
        return Err(err);
    }
    Ok(EnergyMoments {
        speed,
        mean: acc.mean.mean,
        stderr_mean: acc.mean.stderr(),
        mean_sq: acc.sq.mean,
        stderr_sq: acc.sq.stderr(),
        samples: acc.mean.count,
        evaluations: acc.evals,
        step: h,
        crossing_violations: acc.violations,
    })
}

/// Phase-averaged time-reversal pair `ΔE(v) + ΔE(−v)` from the integrator and from the expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck<T> {
    pub speed: T,
    pub oracle: T,
    pub expansion: T,
    /// `‖v‖⁴/2` times the expansion value.
    pub beta4_hat: T,
}

/// Averages the time-reversal pair over a `k`-point phase grid per torus dimension.
pub fn pairing_check<T: Real, const D: usize>(
    speed: T,
    b: Vector<T, D>,
    rotation: Rotation<T, D>,
    c: T,
    s: &SmoothScatterer<T, D>,
    k: usize,
    h: T,
) -> Result<PairingCheck<T>> {
    let e = Vector::<T, D>::axis(0);
    let m = s.profile().torus_dim();
    let grid: Vec<Phase<T>> = if m == 1 {
        (0..k).map(|i| [T::lit(i as f64 / k as f64), T::zero()]).collect()
    } else {
        (0..k * k).map(|i| [T::lit((i / k) as f64 / k as f64), T::lit((i % k) as f64 / k as f64)]).collect()
    };
    let (mut oracle, mut expansion) = (T::zero(), T::zero());
    for phase in &grid {
        let p = ScatterParams::new(&e, b, rotation, *phase, c);
        for v in [e * speed, -(e * speed)] {
            oracle += integrate_fixed(&v, &p, s, h)?.delta_e;
            let (k1, k2) = energy_transfer_expansion(&v, &p, s)?;
            expansion += k1 + k2;
        }
    }
    let n = T::from_usize_lossy(grid.len());
    let (oracle, expansion) = (oracle / n, expansion / n);
    let v4 = speed.powi(4);
    Ok(PairingCheck { speed, oracle, expansion, beta4_hat: expansion * v4 * T::lit(0.5) })
}
