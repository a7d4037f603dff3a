use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::noise::NoiseLaw;
use super::reduced::{gradient_gamma, nongradient_gamma, reduced_xi_step, ReducedState};
use crate::analysis::ForceClass;
use crate::error::{Error, Result};
use crate::lorentz_gas::{traverse_disk, CouplingLaw, DiskHit, Lattice, ScattererField, TimeProfile};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::{CompensatedTime, Real};
use crate::single_scatterer::{bump, bump_grad_factor, SUPPORT_RADIUS};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickKind {
    FlatDiskExact,
    SmoothExpansion,
    SyntheticBeta1,
}

/// Result of one kick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kick<T, const D: usize> {
    pub v: Vector<T, D>,
    /// The reduced variable was reflected at its floor.
    pub boundary_hit: bool,
}

/// Velocity update `v ↦ v + R(v, κ)` for a freshly drawn `κ`.
pub trait KickRule<T: Real, const D: usize>: Send + Sync {
    fn kind(&self) -> KickKind;
    fn apply(&self, v: &Vector<T, D>, tau: &CompensatedTime<T>, rng: &mut dyn rand::RngCore) -> Result<Kick<T, D>>;
}

/// Shared handle to a kick rule.
#[derive(Clone)]
pub struct KickModel<T, const D: usize>(Arc<dyn KickRule<T, D>>);

impl<T: Real, const D: usize> KickModel<T, D> {
    pub fn new(rule: impl KickRule<T, D> + 'static) -> Self {
        Self(Arc::new(rule))
    }

    pub fn kind(&self) -> KickKind {
        self.0.kind()
    }

    #[inline]
    pub fn apply(&self, v: &Vector<T, D>, tau: &CompensatedTime<T>, rng: &mut dyn rand::RngCore) -> Result<Kick<T, D>> {
        self.0.apply(v, tau, rng)
    }

    /// No momentum transfer at all.
    pub fn zero() -> Self {
        Self::new(ZeroKick)
    }

    /// Synthetic walk driven by the reduced recursion; see [`SyntheticKick`].
    pub fn synthetic(k: SyntheticKick<T>) -> Self {
        Self::new(k)
    }

    /// Exact flat-disk scattering on a disk of a random site of `field`, at the current speed.
    pub fn flat_disk_exact<L: Lattice<T, D> + 'static>(field: ScattererField<T, L>, max_internal_bounces: usize) -> Self {
        Self::new(FlatDiskKick { field, max_internal_bounces })
    }

    /// Second-order expansion of the kick of the radial bump scatterer.
    pub fn smooth_expansion(k: SmoothBumpKick<T>) -> Self {
        Self::new(k)
    }
}

struct ZeroKick;

impl<T: Real, const D: usize> KickRule<T, D> for ZeroKick {
    fn kind(&self) -> KickKind {
        KickKind::SyntheticBeta1
    }

    fn apply(&self, v: &Vector<T, D>, _: &CompensatedTime<T>, _: &mut dyn rand::RngCore) -> Result<Kick<T, D>> {
        Ok(Kick { v: *v, boundary_hit: false })
    }
}

/// Uniform unit vector orthogonal to the unit vector `e` (`D ≥ 2`).
fn random_perpendicular<T: Real, const D: usize, R: Rng + ?Sized>(e: &Vector<T, D>, rng: &mut R) -> Vector<T, D> {
    loop {
        let g = Vector::<T, D>::random_unit(rng).reject(e);
        let n = g.norm();
        if n > T::lit(1e-6) {
            return g * n.recip();
        }
    }
}

/// Surrogate kick: the speed follows the reduced recursion with noise `noise`,
/// the direction turns by `deflection·ζ/‖v‖²` with `ζ` standard normal.
///
/// `scale` is `D` (gradient, `ξ = ‖v‖³/(3D)`) or `D′` (non-gradient, `ξ′ = ‖v‖²/(2D′)`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticKick<T> {
    pub class: ForceClass,
    pub dim: usize,
    pub scale: T,
    pub deflection: T,
    pub noise: NoiseLaw,
    /// Overrides `(d−2)/6` or `(d−1)/4`.
    pub gamma: Option<T>,
}

impl<T: Real> SyntheticKick<T> {
    pub fn gamma(&self) -> T {
        self.gamma.unwrap_or_else(|| match self.class {
            ForceClass::Gradient => gradient_gamma(self.dim),
            ForceClass::NonGradient => nongradient_gamma(self.dim),
        })
    }

    pub fn xi_of_speed(&self, speed: T) -> T {
        match self.class {
            ForceClass::Gradient => speed * speed * speed / (T::lit(3.0) * self.scale),
            ForceClass::NonGradient => speed * speed / (T::lit(2.0) * self.scale),
        }
    }

    pub fn speed_of_xi(&self, xi: T) -> T {
        match self.class {
            ForceClass::Gradient => (T::lit(3.0) * self.scale * xi).cbrt(),
            ForceClass::NonGradient => (T::lit(2.0) * self.scale * xi).sqrt(),
        }
    }
}

impl<T: Real, const D: usize> KickRule<T, D> for SyntheticKick<T> {
    fn kind(&self) -> KickKind {
        KickKind::SyntheticBeta1
    }

    fn apply(&self, v: &Vector<T, D>, _: &CompensatedTime<T>, rng: &mut dyn rand::RngCore) -> Result<Kick<T, D>> {
        let speed = v.norm();
        let e = *v * speed.recip();
        let s = ReducedState::new(self.xi_of_speed(speed), self.gamma());
        let was_floor = s.xi > self.xi_of_speed(speed);
        let next = reduced_xi_step(s, T::lit(self.noise.sample(rng)));
        let new_speed = self.speed_of_xi(next.xi);
        let dir = if D >= 2 && self.deflection != T::zero() {
            let theta = self.deflection * T::lit(rng.sample::<f64, _>(StandardNormal)) / (speed * speed);
            let u = random_perpendicular(&e, rng);
            e * theta.cos() + u * theta.sin()
        } else {
            e
        };
        Ok(Kick { v: dir * new_speed, boundary_hit: was_floor || next.boundary_hits > 0 })
    }
}

struct FlatDiskKick<T, L> {
    field: ScattererField<T, L>,
    max_internal_bounces: usize,
}

impl<T: Real, L: Lattice<T, D>, const D: usize> KickRule<T, D> for FlatDiskKick<T, L> {
    fn kind(&self) -> KickKind {
        KickKind::FlatDiskExact
    }

    fn apply(&self, v: &Vector<T, D>, tau: &CompensatedTime<T>, rng: &mut dyn rand::RngCore) -> Result<Kick<T, D>> {
        let speed = v.norm();
        let e = *v * speed.recip();
        let r = self.field.lattice.radius();
        let site = [rng.random::<i32>() as i64, rng.random::<i32>() as i64];
        let b = Vector::random_in_orthogonal_ball(&e, r, rng);
        let depth = (r * r - b.norm2()).max(T::zero()).sqrt();
        let hit = DiskHit { site, entry: b - e * depth, tau_entry: *tau, distance: T::zero() };
        let (_, ev) = traverse_disk(&hit, v, &self.field, self.max_internal_bounces, |_| {})?;
        Ok(Kick { v: ev.v_out, boundary_hit: false })
    }
}

/// Radial line integrals of the bump along a chord at impact `r`.
struct RadialTable<T> {
    step: T,
    values: Vec<T>,
}

impl<T: Real> RadialTable<T> {
    fn build(n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let half = T::lit(SUPPORT_RADIUS);
        let step = half / T::from_usize_lossy(n);
        let opts = QuadratureOptions { abs_tol: 1e-13, rel_tol: 0.0, max_intervals: 4000 };
        let mut values = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let r = step * T::from_usize_lossy(i);
            let w = (half * half - r * r).max(T::zero()).sqrt();
            let v = if w > T::zero() { integrate(|s| f(r * r + s * s), -w, w, opts)?.0 } else { T::zero() };
            values.push(v);
        }
        Ok(Self { step, values })
    }

    fn at(&self, r: T) -> T {
        let x = r / self.step;
        let i = x.floor().as_f64() as usize;
        if i + 1 >= self.values.len() {
            return T::zero();
        }
        let t = x - T::from_usize_lossy(i);
        self.values[i] * (T::one() - t) + self.values[i + 1] * t
    }
}

/// Kick of the bump potential `W = A·bump(‖y‖)·f(φ)` to the orders that fix its moments:
/// `ΔE = β⁽¹⁾/‖v‖ + B/‖v‖⁴`, with the direction turned by `α⁽¹⁾/‖v‖²`.
pub struct SmoothBumpKick<T> {
    amplitude: T,
    profile: TimeProfile<T>,
    coupling: CouplingLaw<T>,
    drift: T,
    along: RadialTable<T>,
    radial: RadialTable<T>,
}

impl<T: Real> SmoothBumpKick<T> {
    /// `drift` is the energy drift coefficient `B` for this coupling law.
    pub fn new(amplitude: T, profile: TimeProfile<T>, coupling: CouplingLaw<T>, drift: T) -> Result<Self> {
        Ok(Self {
            amplitude,
            profile,
            coupling,
            drift,
            along: RadialTable::build(1024, bump)?,
            radial: RadialTable::build(1024, bump_grad_factor)?,
        })
    }
}

impl<T: Real, const D: usize> KickRule<T, D> for SmoothBumpKick<T> {
    fn kind(&self) -> KickKind {
        KickKind::SmoothExpansion
    }

    fn apply(&self, v: &Vector<T, D>, _: &CompensatedTime<T>, rng: &mut dyn rand::RngCore) -> Result<Kick<T, D>> {
        let speed = v.norm();
        let e = *v * speed.recip();
        let b = Vector::random_in_orthogonal_ball(&e, T::lit(SUPPORT_RADIUS), rng);
        let c = self.coupling.quantile(T::lit(rng.random::<f64>()));
        let phi = [T::lit(rng.random::<f64>()), T::lit(rng.random::<f64>())];
        let rb = b.norm();
        let ca = c * self.amplitude;
        let beta1 = ca * self.profile.dtau(&phi) * self.along.at(rb);
        let alpha1 = b * (-ca * self.profile.value(&phi) * self.radial.at(rb));
        let de = beta1 / speed + self.drift / speed.powi(4);
        let s2 = speed * speed + de + de;
        if s2 <= T::zero() {
            return Err(Error::DegenerateVelocity { speed: 0.0 });
        }
        let dir = (*v + alpha1 * speed.recip()).normalized();
        Ok(Kick { v: dir * s2.sqrt(), boundary_hit: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz_gas::{Hexagonal, CouplingLaw};
    use crate::seeding::stream;

    #[test]
    fn flat_disk_kick_conserves_energy_for_static_profile() {
        let field = ScattererField::new(
            Hexagonal::<f64>::new(0.45).unwrap(),
            TimeProfile::constant(1.0),
            CouplingLaw::UniformZeroHalf,
            3,
        );
        let k = KickModel::<f64, 2>::flat_disk_exact(field, 1000);
        let mut rng = stream(1, 0);
        let tau = CompensatedTime::new(0.0);
        for _ in 0..1000 {
            let v = Vector::<f64, 2>::random_unit(&mut rng) * 2.0;
            let out = k.apply(&v, &tau, &mut rng).unwrap();
            assert!((out.v.norm2() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_kick_follows_reduced_variable() {
        let s = SyntheticKick { class: ForceClass::NonGradient, dim: 1, scale: 0.5, deflection: 0.0, noise: NoiseLaw::Rademacher, gamma: None };
        let k = KickModel::<f64, 1>::synthetic(s);
        let mut rng = stream(2, 0);
        let v = Vector([10.0]);
        let out = k.apply(&v, &CompensatedTime::new(0.0), &mut rng).unwrap();
        let xi = s.xi_of_speed(out.v.norm());
        assert!(((xi - 100.0).abs() - 1.0).abs() < 1e-9, "{xi}");
    }

    #[test]
    fn radial_tables_match_direct_quadrature() {
        let t = RadialTable::<f64>::build(1024, bump).unwrap();
        let r: f64 = 0.213;
        let w = (0.25 - r * r).sqrt();
        let opts = QuadratureOptions { abs_tol: 1e-13, rel_tol: 0.0, max_intervals: 4000 };
        let direct = integrate(|s: f64| bump(r * r + s * s), -w, w, opts).unwrap().0;
        assert!((t.at(r) - direct).abs() < 1e-6, "{} vs {direct}", t.at(r));
    }

    #[test]
    fn smooth_kick_second_moment_matches_diffusion_coefficient() {
        use crate::coefficients::{gradient_coeffs, CoeffOptions};
        use crate::single_scatterer::SmoothScatterer;
        let law = CouplingLaw::UniformZeroHalf;
        let s = SmoothScatterer::<f64, 2>::bump(1.0, TimeProfile::F1).unwrap();
        let opts = CoeffOptions { kernel_samples: 400_000, line_samples: 1, ..Default::default() };
        let d2 = gradient_coeffs(&s, law.second_moment(), &opts).unwrap().d2.value;
        let k = KickModel::<f64, 2>::smooth_expansion(SmoothBumpKick::new(1.0, TimeProfile::F1, law, 0.0).unwrap());
        let mut rng = stream(4, 0);
        let speed = 20.0;
        let v0 = Vector([speed, 0.0]);
        let n = 200_000;
        let mut m2 = 0.0;
        for _ in 0..n {
            let out = k.apply(&v0, &CompensatedTime::new(0.0), &mut rng).unwrap();
            let de = (out.v.norm2() - speed * speed) / 2.0;
            m2 += de * de;
        }
        let est = m2 / n as f64 * speed * speed;
        assert!((est / d2 - 1.0).abs() < 0.02, "{est} vs {d2}");
    }
}
