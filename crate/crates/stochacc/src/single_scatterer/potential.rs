use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::lorentz_gas::{Phase, TimeProfile};
use crate::scalar::Real;
use crate::seeding::StreamRng;
use crate::vector::Vector;

/// Radius of the ball outside which every force field vanishes.
pub const SUPPORT_RADIUS: f64 = 0.5;

/// A smooth, compactly supported, time-dependent force `g(y, φ)` in `R^D`.
///
/// Gradient fields also expose the potential `W` with `g = −∇W`. Phase
/// derivatives are taken along the torus flow, `∂_τ = ω·∇_φ`.
pub trait ForceField<T: Real, const D: usize>: Send + Sync {
    fn is_gradient(&self) -> bool;
    fn profile(&self) -> &TimeProfile<T>;
    fn force(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D>;
    fn force_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D>;
    /// `sup ‖g‖` over space and phase.
    fn g_max(&self) -> T;

    fn potential(&self, _y: &Vector<T, D>, _phi: &Phase<T>) -> T {
        T::zero()
    }

    fn potential_dtau(&self, _y: &Vector<T, D>, _phi: &Phase<T>) -> T {
        T::zero()
    }
}

/// `exp(1/(4r²−1))` on the open ball of radius ½, zero outside.
#[inline]
pub fn bump<T: Real>(r2: T) -> T {
    let q = T::lit(4.0) * r2 - T::one();
    if q < T::zero() {
        (q.recip()).exp()
    } else {
        T::zero()
    }
}

/// Radial derivative factor: `∇ bump(y) = bump_grad_factor(‖y‖²)·y`.
#[inline]
pub fn bump_grad_factor<T: Real>(r2: T) -> T {
    let q = T::lit(4.0) * r2 - T::one();
    if q < T::zero() {
        -T::lit(8.0) * (q.recip()).exp() / (q * q)
    } else {
        T::zero()
    }
}

fn profile_max<T: Real>(p: &TimeProfile<T>) -> T {
    let n = 256;
    let mut m = T::zero();
    for i in 0..n {
        let a = T::lit(i as f64 / n as f64);
        if p.torus_dim() == 1 {
            m = m.max(p.value(&[a, T::zero()]).abs());
        } else {
            for j in 0..n {
                m = m.max(p.value(&[a, T::lit(j as f64 / n as f64)]).abs());
            }
        }
    }
    m
}

fn radial_max<T: Real>(f: impl Fn(T) -> T) -> T {
    let n = 4000;
    (0..n).map(|i| f(T::lit(0.5 * i as f64 / n as f64)).abs()).fold(T::zero(), T::max)
}

/// Separable gradient field `W(y, φ) = A·bump(‖y‖)·f(φ)`.
#[derive(Clone, Debug)]
pub struct BumpPotential<T> {
    pub amplitude: T,
    pub profile: TimeProfile<T>,
    g_max: T,
}

impl<T: Real> BumpPotential<T> {
    pub fn new(amplitude: T, profile: TimeProfile<T>) -> Self {
        let slope = radial_max(|r: T| bump_grad_factor(r * r) * r);
        let g_max = amplitude.abs() * slope * profile_max(&profile);
        Self { amplitude, profile, g_max }
    }
}

impl<T: Real, const D: usize> ForceField<T, D> for BumpPotential<T> {
    fn is_gradient(&self) -> bool {
        true
    }

    fn profile(&self) -> &TimeProfile<T> {
        &self.profile
    }

    fn force(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        *y * (-self.amplitude * bump_grad_factor(y.norm2()) * self.profile.value(phi))
    }

    fn force_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        *y * (-self.amplitude * bump_grad_factor(y.norm2()) * self.profile.dtau(phi))
    }

    fn g_max(&self) -> T {
        self.g_max
    }

    fn potential(&self, y: &Vector<T, D>, phi: &Phase<T>) -> T {
        self.amplitude * bump(y.norm2()) * self.profile.value(phi)
    }

    fn potential_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> T {
        self.amplitude * bump(y.norm2()) * self.profile.dtau(phi)
    }
}

/// Divergence-free rotational field `A·bump(‖y‖)·(−y₂, y₁, 0, …)·f(φ)`.
///
/// In one dimension the field is `A·bump(|y|)·f(φ)`, whose nonzero line
/// integral rules out a compactly supported potential.
#[derive(Clone, Debug)]
pub struct SwirlField<T> {
    pub amplitude: T,
    pub profile: TimeProfile<T>,
    g_max: T,
}

impl<T: Real> SwirlField<T> {
    pub fn new<const D: usize>(amplitude: T, profile: TimeProfile<T>) -> Self {
        let radial = if D == 1 { radial_max(|r: T| bump(r * r)) } else { radial_max(|r: T| bump(r * r) * r) };
        let g_max = amplitude.abs() * radial * profile_max(&profile);
        Self { amplitude, profile, g_max }
    }

    #[inline]
    fn shape<const D: usize>(&self, y: &Vector<T, D>) -> Vector<T, D> {
        let w = self.amplitude * bump(y.norm2());
        if D == 1 {
            return Vector::from_fn(|_| w);
        }
        let mut out = Vector::zero();
        out[0] = -y[1] * w;
        out[1] = y[0] * w;
        out
    }
}

impl<T: Real, const D: usize> ForceField<T, D> for SwirlField<T> {
    fn is_gradient(&self) -> bool {
        false
    }

    fn profile(&self) -> &TimeProfile<T> {
        &self.profile
    }

    fn force(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        self.shape(y) * self.profile.value(phi)
    }

    fn force_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        self.shape(y) * self.profile.dtau(phi)
    }

    fn g_max(&self) -> T {
        self.g_max
    }
}

/// A validated force field shared between threads.
#[derive(Clone)]
pub struct SmoothScatterer<T, const D: usize> {
    field: Arc<dyn ForceField<T, D>>,
}

impl<T, const D: usize> fmt::Debug for SmoothScatterer<T, D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothScatterer<{D}>")
    }
}

impl<T: Real, const D: usize> SmoothScatterer<T, D> {
    /// Wraps `field` after checking its derivatives against central differences.
    pub fn new(field: Arc<dyn ForceField<T, D>>) -> Result<Self> {
        let s = Self { field };
        s.self_check()?;
        Ok(s)
    }

    pub fn bump(amplitude: T, profile: TimeProfile<T>) -> Result<Self> {
        Self::new(Arc::new(BumpPotential::new(amplitude, profile)))
    }

    pub fn swirl(amplitude: T, profile: TimeProfile<T>) -> Result<Self> {
        Self::new(Arc::new(SwirlField::new::<D>(amplitude, profile)))
    }

    pub fn field(&self) -> &dyn ForceField<T, D> {
        &*self.field
    }

    pub fn is_gradient(&self) -> bool {
        self.field.is_gradient()
    }

    pub fn g_max(&self) -> T {
        self.field.g_max()
    }

    pub fn profile(&self) -> &TimeProfile<T> {
        self.field.profile()
    }

    #[inline]
    pub fn force(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        self.field.force(y, phi)
    }

    fn self_check(&self) -> Result<()> {
        // Finite differences are done in f64 regardless of T.
        let f = &*self.field;
        let mut rng = StreamRng::seed_from_u64(0x5eed);
        let h = 1e-5;
        let prof = f.profile();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1e-300;
        for _ in 0..64 {
            let r = 0.45 * rng.random::<f64>().powf(1.0 / D as f64);
            let y = Vector::<T, D>::random_unit(&mut rng) * T::lit(r);
            let phi: Phase<T> = [T::lit(rng.random()), T::lit(rng.random())];
            let fwd = prof.shift(&phi, T::lit(h));
            let bwd = prof.shift(&phi, T::lit(-h));
            let dg = (f.force(&y, &fwd) - f.force(&y, &bwd)) * T::lit(0.5 / h);
            let an = f.force_dtau(&y, &phi);
            worst = worst.max((dg - an).norm().as_f64());
            scale = scale.max(an.norm().as_f64()).max(f.force(&y, &phi).norm().as_f64());
            if f.is_gradient() {
                let dw = (f.potential(&y, &fwd) - f.potential(&y, &bwd)) * T::lit(0.5 / h);
                worst = worst.max((dw - f.potential_dtau(&y, &phi)).abs().as_f64());
                let grad = Vector::<T, D>::from_fn(|k| {
                    let dk = Vector::<T, D>::axis(k) * T::lit(h);
                    (f.potential(&(y + dk), &phi) - f.potential(&(y - dk), &phi)) * T::lit(0.5 / h)
                });
                worst = worst.max((grad + f.force(&y, &phi)).norm().as_f64());
            }
            let outside = y.normalized() * T::lit(0.5 + 1e-9);
            if f.force(&outside, &phi).norm() != T::zero() {
                return Err(Error::InvalidParameter("force does not vanish outside radius 1/2".into()));
            }
        }
        let tol = 1e-5 * (1.0 + scale) * if std::mem::size_of::<T>() < 8 { 1e4 } else { 1.0 };
        if worst > tol {
            return Err(Error::InvalidParameter(format!(
                "supplied derivatives disagree with finite differences by {worst:.3e}"
            )));
        }
        Ok(())
    }
}
