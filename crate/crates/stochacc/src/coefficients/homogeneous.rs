use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Real;

/// Radial correlation of a homogeneous, isotropic random field.
pub enum Correlation<'a, T> {
    /// Potential correlation `K(‖y‖, t)`.
    Gradient(&'a (dyn Fn(T, T) -> T + Sync)),
    /// Longitudinal and transverse force correlations `Λ₁(‖y‖, t)`, `Λ₂(‖y‖, t)`.
    /// Only `Λ₁` enters the leading coefficients.
    NonGradient {
        lambda1: &'a (dyn Fn(T, T) -> T + Sync),
        lambda2: &'a (dyn Fn(T, T) -> T + Sync),
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Gradient,
    NonGradient,
}

/// Drift and diffusion of the energy for a walk with free flights of length `η*`.
///
/// For the gradient case `k0`, `k1` are the moments of `−∂²_t K(μ, 0)`, and
/// `b`, `d2` are `B̃`, `D̃²`; for the non-gradient case they are the moments of
/// `Λ₁(μ, 0)` and `B̃′`, `D̃′²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousCoeffs<T> {
    pub kind: CorrelationKind,
    pub dim: usize,
    pub eta_star: T,
    pub k0: T,
    pub k1: T,
    pub b: T,
    pub d2: T,
    pub gamma: T,
}

/// Step for the central second difference in `t`.
const DT: f64 = 1e-2;

/// `−∂²_t K(μ, 0)` by the five-point stencil, exact for quartics in `t`.
fn minus_d2t<T: Real>(k: &dyn Fn(T, T) -> T, mu: T) -> T {
    let h = T::lit(DT);
    let f = |t: T| k(mu, t);
    let num = -f(h * T::lit(2.0)) + T::lit(16.0) * f(h) - T::lit(30.0) * f(T::zero()) + T::lit(16.0) * f(-h)
        - f(-h * T::lit(2.0));
    -num / (T::lit(12.0) * h * h)
}

fn moments<T: Real>(g: impl Fn(T) -> T) -> Result<(T, T)> {
    let opts = QuadratureOptions { abs_tol: 1e-12, rel_tol: 0.0, max_intervals: 4000 };
    let (k0, _) = integrate(&g, T::zero(), T::one(), opts)?;
    let (k1, _) = integrate(|mu| mu * g(mu), T::zero(), T::one(), opts)?;
    Ok((k0, k1))
}

pub fn homogeneous_coeffs<T: Real>(corr: &Correlation<'_, T>, eta_star: T, dim: usize) -> Result<HomogeneousCoeffs<T>> {
    let d = T::from_usize_lossy(dim);
    let two = T::lit(2.0);
    match corr {
        Correlation::Gradient(k) => {
            let (k0, k1) = moments(|mu| minus_d2t(*k, mu))?;
            let b = (d - T::lit(3.0)) * eta_star * k0 - two * (d - T::lit(4.0)) * k1;
            let d2 = two * (eta_star * k0 - k1);
            let gamma = if d2 == T::zero() { T::zero() } else { (b / d2 + T::lit(0.5)) / T::lit(3.0) };
            Ok(HomogeneousCoeffs { kind: CorrelationKind::Gradient, dim, eta_star, k0, k1, b, d2, gamma })
        }
        Correlation::NonGradient { lambda1, .. } => {
            let (k0, k1) = moments(|mu| lambda1(mu, T::zero()))?;
            let b = eta_star * (d - T::one()) * k0 - (d - two) * k1;
            let d2 = two * (eta_star * k0 - k1);
            let gamma = if d2 == T::zero() { T::zero() } else { b / (two * d2) };
            Ok(HomogeneousCoeffs { kind: CorrelationKind::NonGradient, dim, eta_star, k0, k1, b, d2, gamma })
        }
    }
}
