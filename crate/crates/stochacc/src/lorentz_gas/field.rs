use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lattice::Site;
use crate::scalar::{CompensatedTime, Real};
use crate::seeding::{hash_words, splitmix64, unit_f64, SITE_DOMAIN};

/// Point on the torus `T^m`, `m <= 2`; unused components are zero.
pub type Phase<T> = [T; 2];

type PhaseFn<T> = Arc<dyn Fn(&Phase<T>) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    F1,
    F2,
    F3,
    Custom,
}

/// Periodic modulation `f(φ)` of a scatterer height, driven by `φ = φ⁰ + ωτ`.
#[derive(Clone)]
pub enum TimeProfile<T> {
    /// `cos 2πφ`
    F1,
    /// `1 + cos² 2πφ`
    F2,
    /// `cos 2πφ₁ + cos 2πφ₂` with `ω ∝ (1, √2)`
    F3,
    Custom { torus_dim: usize, omega: Phase<T>, f: PhaseFn<T>, dtau: PhaseFn<T> },
}

impl<T> fmt::Debug for TimeProfile<T> {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::F1 => write!(fm, "F1"),
            Self::F2 => write!(fm, "F2"),
            Self::F3 => write!(fm, "F3"),
            Self::Custom { torus_dim, .. } => write!(fm, "Custom(m={torus_dim})"),
        }
    }
}

impl<T: Real> TimeProfile<T> {
    /// Time-independent profile `f ≡ value`.
    pub fn constant(value: T) -> Self {
        Self::Custom {
            torus_dim: 1,
            omega: [T::one(), T::zero()],
            f: Arc::new(move |_| value),
            dtau: Arc::new(|_| T::zero()),
        }
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            Self::F1 => ProfileKind::F1,
            Self::F2 => ProfileKind::F2,
            Self::F3 => ProfileKind::F3,
            Self::Custom { .. } => ProfileKind::Custom,
        }
    }

    pub fn torus_dim(&self) -> usize {
        match self {
            Self::F3 => 2,
            Self::Custom { torus_dim, .. } => *torus_dim,
            _ => 1,
        }
    }

    pub fn omega(&self) -> Phase<T> {
        match self {
            Self::F3 => {
                let n = 3f64.sqrt();
                [T::lit(1.0 / n), T::lit(2f64.sqrt() / n)]
            }
            Self::Custom { omega, .. } => *omega,
            _ => [T::one(), T::zero()],
        }
    }

    #[inline]
    pub fn value(&self, phi: &Phase<T>) -> T {
        let tau = T::TAU();
        match self {
            Self::F1 => (tau * phi[0]).cos(),
            Self::F2 => {
                let c = (tau * phi[0]).cos();
                T::one() + c * c
            }
            Self::F3 => (tau * phi[0]).cos() + (tau * phi[1]).cos(),
            Self::Custom { f, .. } => f(phi),
        }
    }

    /// `ω·∇_φ f`.
    pub fn dtau(&self, phi: &Phase<T>) -> T {
        let tau = T::TAU();
        match self {
            Self::F1 => -tau * (tau * phi[0]).sin(),
            Self::F2 => -tau * (T::lit(2.0) * tau * phi[0]).sin(),
            Self::F3 => {
                let w = self.omega();
                -tau * (w[0] * (tau * phi[0]).sin() + w[1] * (tau * phi[1]).sin())
            }
            Self::Custom { dtau, .. } => dtau(phi),
        }
    }

    /// Phase reached from `phase0` after time `tau`, reduced to `[0, 1)`.
    #[inline]
    pub fn advance(&self, phase0: &Phase<T>, tau: &CompensatedTime<T>) -> Phase<T> {
        let w = self.omega();
        let mut out = [T::zero(); 2];
        for k in 0..self.torus_dim() {
            out[k] = tau.phase(phase0[k], w[k]);
        }
        out
    }

    /// Phase reached from `phase0` after a short, plain time `dt`.
    pub fn shift(&self, phase0: &Phase<T>, dt: T) -> Phase<T> {
        let w = self.omega();
        let mut out = *phase0;
        for k in 0..self.torus_dim() {
            out[k] += w[k] * dt;
        }
        out
    }
}

/// Distribution of the per-site coupling `c_N`.
#[derive(Clone)]
pub enum CouplingLaw<T> {
    UniformZeroHalf,
    Fixed(T),
    Uniform { lo: T, hi: T },
    /// Quantile function on `[0, 1)`.
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T> fmt::Debug for CouplingLaw<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformZeroHalf => write!(fm, "UniformZeroHalf"),
            Self::Fixed(c) => write!(fm, "Fixed({c:?})"),
            Self::Uniform { lo, hi } => write!(fm, "Uniform({lo:?}, {hi:?})"),
            Self::Custom(_) => write!(fm, "Custom"),
        }
    }
}

impl<T: Real> CouplingLaw<T> {
    pub fn quantile(&self, u: T) -> T {
        match self {
            Self::UniformZeroHalf => u * T::lit(0.5),
            Self::Fixed(c) => *c,
            Self::Uniform { lo, hi } => *lo + (*hi - *lo) * u,
            Self::Custom(q) => q(u),
        }
    }

    /// Second moment, by quadrature of the quantile function when not closed-form.
    pub fn second_moment(&self) -> T {
        match self {
            Self::UniformZeroHalf => T::lit(1.0 / 12.0),
            Self::Fixed(c) => *c * *c,
            Self::Uniform { lo, hi } => (*lo * *lo + *lo * *hi + *hi * *hi) / T::lit(3.0),
            Self::Custom(q) => {
                let n = 4096;
                (0..n)
                    .map(|i| {
                        let c = q(T::lit((i as f64 + 0.5) / n as f64));
                        c * c
                    })
                    .sum::<T>()
                    / T::lit(n as f64)
            }
        }
    }
}

/// Coupling and initial phase of one scatterer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteState<T> {
    pub c: T,
    pub phase0: Phase<T>,
}

/// Lattice of flat disks with potential `c_N f(φ⁰_N + ωτ)` inside disk `N`.
///
/// Site randomness is a pure function of `(master_seed, site)`, so the field
/// needs no storage and is shared freely between threads.
#[derive(Clone, Debug)]
pub struct ScattererField<T, L> {
    pub lattice: L,
    pub profile: TimeProfile<T>,
    pub coupling: CouplingLaw<T>,
    pub master_seed: u64,
}

impl<T: Real, L> ScattererField<T, L> {
    pub fn new(lattice: L, profile: TimeProfile<T>, coupling: CouplingLaw<T>, master_seed: u64) -> Self {
        Self { lattice, profile, coupling, master_seed }
    }

    #[inline]
    pub fn site(&self, site: Site) -> SiteState<T> {
        let h = hash_words(&[self.master_seed, SITE_DOMAIN, site[0] as u64, site[1] as u64]);
        let c = self.coupling.quantile(T::lit(unit_f64(splitmix64(h))));
        let phase0 = [T::lit(unit_f64(splitmix64(h ^ 1))), T::lit(unit_f64(splitmix64(h ^ 2)))];
        SiteState { c, phase0 }
    }

    /// Height of the potential inside `site` at time `tau`.
    #[inline]
    pub fn potential(&self, site: Site, tau: &CompensatedTime<T>) -> T {
        let s = self.site(site);
        if s.c == T::zero() {
            return T::zero();
        }
        s.c * self.profile.value(&self.profile.advance(&s.phase0, tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz_gas::lattice::{Chain, Hexagonal};

    #[test]
    fn site_draws_are_deterministic() {
        let f = ScattererField::new(Hexagonal::new(0.45).unwrap(), TimeProfile::F1, CouplingLaw::UniformZeroHalf, 7);
        assert_eq!(f.site([0, 0]), f.site([0, 0]));
        assert_ne!(f.site([0, 0]), f.site([1, 0]));
        let s = f.site([3, -2]);
        assert!((0.0..=0.5).contains(&s.c));
        let g = ScattererField::new(Hexagonal::new(0.45).unwrap(), TimeProfile::F1, CouplingLaw::UniformZeroHalf, 8);
        assert_ne!(f.site([0, 0]), g.site([0, 0]));
    }

    #[test]
    fn fixed_coupling_applies_everywhere() {
        let f = ScattererField::new(Chain::new(0.25).unwrap(), TimeProfile::F1, CouplingLaw::Fixed(1.0), 1);
        for i in -50..50 {
            assert_eq!(f.site([i, 0]).c, 1.0);
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let h = 1e-6;
        for p in [TimeProfile::<f64>::F1, TimeProfile::F2, TimeProfile::F3] {
            for &x in &[0.1, 0.37, 0.8] {
                let phi = [x, 0.5 * x + 0.2];
                let fwd = p.value(&p.shift(&phi, h));
                let bwd = p.value(&p.shift(&phi, -h));
                let fd = (fwd - bwd) / (2.0 * h);
                assert!((fd - p.dtau(&phi)).abs() < 1e-6, "{p:?} at {x}");
            }
        }
    }

    #[test]
    fn f3_frequency_is_unit_and_irrational_ratio() {
        let w = TimeProfile::<f64>::F3.omega();
        assert!((w[0] * w[0] + w[1] * w[1] - 1.0).abs() < 1e-15);
        assert!((w[1] / w[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coupling_second_moments() {
        assert!((CouplingLaw::<f64>::UniformZeroHalf.second_moment() - 1.0 / 12.0).abs() < 1e-15);
        let custom = CouplingLaw::<f64>::Custom(Arc::new(|u| 2.0 * u - 1.0));
        assert!((custom.second_moment() - 1.0 / 3.0).abs() < 1e-6);
    }
}
