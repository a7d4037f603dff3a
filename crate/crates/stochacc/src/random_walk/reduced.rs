use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Reduced speed variable of the surrogate walk.
///
/// Gradient forces use `ξ = ‖v‖³/(3D)` with `γ = (d−2)/6`; non-gradient ones
/// use `ξ′ = ‖v‖²/(2D′)` with `γ′ = (d−1)/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedState<T> {
    pub xi: T,
    pub gamma: T,
    pub n: u64,
    /// Steps reflected at the floor.
    pub boundary_hits: u64,
}

pub fn gradient_gamma<T: Real>(dim: usize) -> T {
    T::lit((dim as f64 - 2.0) / 6.0)
}

pub fn nongradient_gamma<T: Real>(dim: usize) -> T {
    T::lit((dim as f64 - 1.0) / 4.0)
}

/// Lowest admissible `ξ`; below it the drift term `γ/ξ` is no longer small.
pub fn xi_floor<T: Real>(gamma: T) -> T {
    T::one().max(T::lit(3.0) * gamma.abs())
}

impl<T: Real> ReducedState<T> {
    pub fn new(xi: T, gamma: T) -> Self {
        Self { xi: xi.max(xi_floor(gamma)), gamma, n: 0, boundary_hits: 0 }
    }

    /// Fraction of steps that needed a reflection.
    pub fn boundary_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.boundary_hits as f64 / self.n as f64
        }
    }
}

/// `ξ ← ξ + ε + γ/ξ`, reflected at the floor.
#[inline]
pub fn reduced_xi_step<T: Real>(s: ReducedState<T>, eps: T) -> ReducedState<T> {
    let floor = xi_floor(s.gamma);
    let mut xi = s.xi + eps + s.gamma / s.xi;
    let mut hits = s.boundary_hits;
    if xi <= floor {
        xi = floor + floor - xi;
        hits += 1;
    }
    ReducedState { xi, gamma: s.gamma, n: s.n + 1, boundary_hits: hits }
}

/// Same recursion for `ξ′`; `s.gamma` carries `γ′`.
#[inline]
pub fn nongradient_reduced_step<T: Real>(s: ReducedState<T>, eps: T) -> ReducedState<T> {
    reduced_xi_step(s, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Welford;
    use crate::random_walk::NoiseLaw;
    use crate::seeding::stream;

    #[test]
    fn gammas() {
        assert_eq!(gradient_gamma::<f64>(2), 0.0);
        assert_eq!(nongradient_gamma::<f64>(1), 0.0);
        assert!(gradient_gamma::<f64>(1) >= -1.0 / 6.0);
    }

    #[test]
    fn zero_gamma_is_pure_random_walk() {
        let s = ReducedState::new(50.0, 0.0);
        let t = reduced_xi_step(s, 0.7);
        assert_eq!(t.xi, 50.7);
        assert_eq!(t.n, 1);
    }

    #[test]
    fn reflection_is_counted() {
        let s = ReducedState::new(1.5, 0.0);
        let t = reduced_xi_step(s, -1.0);
        assert_eq!(t.xi, 1.5);
        assert_eq!(t.boundary_hits, 1);
    }

    #[test]
    fn early_drift_matches_linear_prediction() {
        // n ≪ ξ₀²: ⟨ξ_n⟩ ≈ ξ₀ + nγ/ξ₀.
        let (xi0, gamma, n) = (100.0, -1.0 / 6.0, 200);
        let mut w = Welford::new();
        for k in 0..20_000 {
            let mut rng = stream(5, k);
            let mut s = ReducedState::new(xi0, gamma);
            for _ in 0..n {
                s = reduced_xi_step(s, NoiseLaw::Normal.sample(&mut rng));
            }
            w.push(s.xi);
        }
        let expect = xi0 + n as f64 * gamma / xi0;
        assert!((w.mean - expect).abs() < 3.0 * w.stderr(), "{} vs {expect}", w.mean);
    }
}
