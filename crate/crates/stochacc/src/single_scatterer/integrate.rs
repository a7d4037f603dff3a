use rand::Rng;

use super::potential::{SmoothScatterer, SUPPORT_RADIUS};
use crate::error::{Error, Result};
use crate::lorentz_gas::{CouplingLaw, Phase};
use crate::scalar::Real;
use crate::vector::{Rotation, Vector};

/// Radius of the ball whose entry and exit times are reported.
pub const OUTER_RADIUS: f64 = 2.5;
/// Largest change of `ΔE` under step halving accepted by [`integrate_scattering`].
pub const HALVING_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 14;

/// Impact parameter, orientation, phase and coupling of one scattering event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterParams<T, const D: usize> {
    pub b: Vector<T, D>,
    pub rotation: Rotation<T, D>,
    pub phase: Phase<T>,
    pub c: T,
}

impl<T: Real, const D: usize> ScatterParams<T, D> {
    /// Builds parameters for incidence direction `e`, projecting `b` onto `e^⊥`.
    pub fn new(e: &Vector<T, D>, b: Vector<T, D>, rotation: Rotation<T, D>, phase: Phase<T>, c: T) -> Self {
        Self { b: b.reject(e), rotation, phase, c }
    }

    /// `b` uniform in the ball of radius ½ in `e^⊥`, Haar rotation, uniform phase, `c` from `coupling`.
    pub fn sample<R: Rng + ?Sized>(e: &Vector<T, D>, coupling: &CouplingLaw<T>, rng: &mut R) -> Self {
        let b = Vector::random_in_orthogonal_ball(e, T::lit(SUPPORT_RADIUS), rng);
        let rotation = Rotation::haar(rng);
        let phase = [T::lit(rng.random()), T::lit(rng.random())];
        let c = coupling.quantile(T::lit(rng.random()));
        Self { b, rotation, phase, c }
    }
}

/// Result of integrating one passage through a smooth scatterer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterOutcome<T, const D: usize> {
    pub dv: Vector<T, D>,
    pub delta_e: T,
    pub tau_in: T,
    pub tau_out: T,
    /// Every step inside the support met the crossing-time bounds.
    pub crossing_bounds_hold: bool,
    /// Steps inside the support.
    pub support_steps: usize,
    pub step: T,
}

/// Default step `min(10⁻³, 1/(20‖v‖))`.
pub fn default_step<T: Real>(speed: T) -> T {
    T::lit(1e-3).min((T::lit(20.0) * speed).recip())
}

/// Speed below which the scatterer can stop or reverse the particle.
pub fn regime_speed<T: Real>(c: T, g_max: T) -> T {
    (T::lit(12.0) * c.abs() * g_max).sqrt()
}

fn check_regime<T: Real, const D: usize>(speed: T, c: T, s: &SmoothScatterer<T, D>) -> Result<()> {
    let required = regime_speed(c, s.g_max());
    if speed < required {
        return Err(Error::RegimeViolation { speed: speed.as_f64(), required: required.as_f64() });
    }
    Ok(())
}

/// Time to reach radius `r` from `y` moving with `v`: the later root when `later`, else the earlier.
fn sphere_time<T: Real, const D: usize>(y: &Vector<T, D>, v: &Vector<T, D>, r: T, later: bool) -> T {
    let a = v.norm2();
    let b = y.dot(v);
    let c = y.norm2() - r * r;
    let disc = (b * b - a * c).max(T::zero()).sqrt();
    if later {
        (-b + disc) / a
    } else {
        (-b - disc) / a
    }
}

/// Integrates `ÿ = c·M g(M⁻¹y, φ + ωτ)` with classical RK4 at fixed step `h`.
///
/// Starts from `y(0) = b − e/2` with velocity `v0` and stops once the particle
/// leaves the support moving outward; the remaining flight is free.
pub fn integrate_fixed<T: Real, const D: usize>(
    v0: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
    h: T,
) -> Result<ScatterOutcome<T, D>> {
    let speed = v0.norm();
    if speed < T::lit(1e-12) {
        return Err(Error::DegenerateVelocity { speed: speed.as_f64() });
    }
    check_regime(speed, params.c, s)?;
    let e = *v0 * speed.recip();
    let y0 = params.b - e * T::lit(0.5);
    let outer = T::lit(OUTER_RADIUS);
    let tau_in = sphere_time(&y0, v0, outer, false);
    let half = T::lit(SUPPORT_RADIUS);
    let prof = s.profile();
    let m = &params.rotation;
    let c = params.c;
    let accel = |y: &Vector<T, D>, tau: T| -> Vector<T, D> {
        let phi = prof.shift(&params.phase, tau);
        m.apply(&s.force(&m.apply_inverse(y), &phi)) * c
    };

    let (mut y, mut v) = (y0, *v0);
    let mut k = 0usize;
    // Crossing-time bounds are monotone in t, so the first and last in-support steps suffice.
    let mut inside: Option<(T, T)> = None;
    let mut support_steps = 0;
    let max_steps = (T::lit(1e3) / (speed * h)).to_usize().unwrap_or(usize::MAX).max(1000);
    let h2 = h * T::lit(0.5);
    let h6 = h / T::lit(6.0);
    if c != T::zero() && params.b.norm() < half {
        loop {
            let tau = T::from_usize_lossy(k) * h;
            let a1 = accel(&y, tau);
            let a2 = accel(&(y + v * h2), tau + h2);
            let y3 = y + v * h2 + a1 * (h * h2 * T::lit(0.5));
            let a3 = accel(&y3, tau + h2);
            let y4 = y + v * h + a2 * (h * h2);
            let a4 = accel(&y4, tau + h);
            y += (v * T::lit(6.0) + (a1 + a2 + a3) * h) * h6;
            v += (a1 + (a2 + a3) * T::lit(2.0) + a4) * h6;
            k += 1;
            if y.norm() <= half {
                let t = T::from_usize_lossy(k) * h;
                inside = Some((inside.map_or(t, |p| p.0), t));
                support_steps += 1;
            } else if y.dot(&v) > T::zero() && k > 1 {
                break;
            }
            if k > max_steps {
                return Err(Error::NoConvergence { change: f64::INFINITY, tol: HALVING_TOL });
            }
        }
    }
    let tau_last = T::from_usize_lossy(k) * h;
    let tau_out = tau_last + sphere_time(&y, &v, outer, true);
    let (lo, hi) = (speed.recip(), T::lit(5.0) / speed);
    let slack = T::lit(1e-9) * hi;
    let crossing_bounds_hold = inside.is_none_or(|(first, last)| {
        [first, last].iter().all(|&t| {
            let (a, b) = (t - tau_in, tau_out - t);
            a.min(b) >= lo - slack && a.max(b) <= hi + slack
        })
    });
    let delta_e = T::lit(0.5) * (v.norm2() - v0.norm2());
    Ok(ScatterOutcome {
        dv: v - *v0,
        delta_e,
        tau_in,
        tau_out,
        crossing_bounds_hold,
        support_steps,
        step: h,
    })
}

/// Integrates at steps `h` and `h/2` and returns the finer result.
///
/// Fails with [`Error::NoConvergence`] if the two energy changes differ by
/// [`HALVING_TOL`] or more.
pub fn integrate_scattering<T: Real, const D: usize>(
    v0: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
    h: T,
) -> Result<ScatterOutcome<T, D>> {
    let coarse = integrate_fixed(v0, params, s, h)?;
    let fine = integrate_fixed(v0, params, s, h * T::lit(0.5))?;
    let change = (coarse.delta_e - fine.delta_e).abs().as_f64();
    if change >= HALVING_TOL {
        return Err(Error::NoConvergence { change, tol: HALVING_TOL });
    }
    Ok(fine)
}

/// Halves the step from [`default_step`] until `ΔE` changes by less than `tol`.
pub fn integrate_converged<T: Real, const D: usize>(
    v0: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
    tol: f64,
) -> Result<ScatterOutcome<T, D>> {
    let mut h = default_step(v0.norm());
    let mut prev = integrate_fixed(v0, params, s, h)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        h = h * T::lit(0.5);
        let next = integrate_fixed(v0, params, s, h)?;
        change = (next.delta_e - prev.delta_e).abs().as_f64();
        if change < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence { change, tol })
}

/// Largest step, by halving from [`default_step`], that converges to `tol` on a probe set of events.
///
/// Probes cover central, intermediate and grazing impact parameters over a
/// spread of phases, with the largest admissible coupling magnitude.
pub fn calibrate_step<T: Real, const D: usize>(speed: T, s: &SmoothScatterer<T, D>, c: T, tol: f64) -> Result<T> {
    let e = Vector::<T, D>::axis(0);
    let v0 = e * speed;
    let mut h = T::infinity();
    let radii: &[f64] = if D == 1 { &[0.0] } else { &[0.0, 0.2, 0.35, 0.45] };
    for &r in radii {
        for k in 0..4 {
            let b = if D == 1 { Vector::zero() } else { Vector::axis(1) * T::lit(r) };
            let phase = [T::lit(k as f64 / 4.0 + 0.05), T::lit(k as f64 / 7.0)];
            let p = ScatterParams::new(&e, b, Rotation::identity(), phase, c);
            h = h.min(integrate_converged(&v0, &p, s, tol)?.step);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz_gas::TimeProfile;
    use crate::seeding::StreamRng;
    use rand::SeedableRng;

    fn bump2() -> SmoothScatterer<f64, 2> {
        SmoothScatterer::bump(1.0, TimeProfile::F1).unwrap()
    }

    #[test]
    fn zero_coupling_is_exact_free_flight() {
        let s = bump2();
        let v0 = Vector([3.0, 4.0]);
        let p = ScatterParams::new(&v0.normalized(), Vector([0.4, -0.3]), Rotation::identity(), [0.2, 0.0], 0.0);
        let out = integrate_fixed(&v0, &p, &s, 1e-3).unwrap();
        assert_eq!(out.dv, Vector::zero());
        assert_eq!(out.delta_e, 0.0);
    }

    #[test]
    fn regime_is_enforced() {
        let s = bump2();
        let p = ScatterParams::new(&Vector::axis(0), Vector::zero(), Rotation::identity(), [0.0; 2], 1.0);
        let slow = 0.5 * regime_speed(1.0, s.g_max());
        assert!(matches!(
            integrate_fixed(&Vector([slow, 0.0]), &p, &s, 1e-3),
            Err(Error::RegimeViolation { .. })
        ));
    }

    #[test]
    fn crossing_time_bounds_hold() {
        let s = bump2();
        let mut rng = StreamRng::seed_from_u64(9);
        for &speed in &[5.0, 10.0, 20.0] {
            for _ in 0..20 {
                let e = Vector::<f64, 2>::random_unit(&mut rng);
                let p = ScatterParams::sample(&e, &CouplingLaw::Uniform { lo: -1.0, hi: 1.0 }, &mut rng);
                let out = integrate_fixed(&(e * speed), &p, &s, default_step(speed)).unwrap();
                assert!(out.crossing_bounds_hold);
            }
        }
    }

    #[test]
    fn step_halving_converges() {
        let s = bump2();
        let e = Vector::<f64, 2>::axis(0);
        let p = ScatterParams::new(&e, Vector([0.0, 0.1]), Rotation::identity(), [0.1, 0.0], 1.0);
        let out = integrate_converged(&(e * 10.0), &p, &s, 1e-10).unwrap();
        let check = integrate_fixed(&(e * 10.0), &p, &s, out.step * 0.5).unwrap();
        assert!((check.delta_e - out.delta_e).abs() < 1e-10);
    }

    #[test]
    fn rotation_covariance() {
        let s = bump2();
        let mut rng = StreamRng::seed_from_u64(21);
        for _ in 0..10 {
            let e = Vector::<f64, 2>::random_unit(&mut rng);
            let p = ScatterParams::sample(&e, &CouplingLaw::Fixed(1.0), &mut rng);
            let r = Rotation::<f64, 2>::haar(&mut rng);
            let a = integrate_fixed(&(e * 8.0), &p, &s, 1e-4).unwrap();
            let q = ScatterParams { b: r.apply(&p.b), rotation: r.compose(&p.rotation), ..p };
            let b = integrate_fixed(&(r.apply(&e) * 8.0), &q, &s, 1e-4).unwrap();
            assert!((r.apply(&a.dv) - b.dv).norm() < 1e-12);
            assert!((a.delta_e - b.delta_e).abs() < 1e-12);
        }
    }
}
