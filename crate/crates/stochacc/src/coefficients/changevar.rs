use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{impact_volume, pair_weight, sample_pair, sphere_area};
use super::scatterer::Estimate;
use crate::analysis::Welford;
use crate::ensemble::{chunked_reduce, SAMPLE_CHUNK};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seeding::stream;
use crate::vector::Vector;

/// Both sides of the line/pair change of variables for one test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeVarResult<T> {
    /// Integral over oriented lines `(e, b, λ, λ′)`, halved for the two orientations.
    pub lhs: Estimate<T>,
    /// `∫∫‖y−y′‖^{1−d} f(y, y′, ‖y−y′‖) dy dy′`.
    pub rhs: Estimate<T>,
    pub rel_diff: T,
}

fn welford_mc<T: Real>(n: u64, workers: usize, f: impl Fn(u64) -> T + Sync) -> Result<Estimate<T>> {
    let w = chunked_reduce(n, SAMPLE_CHUNK, workers, Welford::new, |acc, i| acc.push(f(i)), |a, b| a.merge(&b))?;
    Ok(Estimate { value: w.mean, stderr: w.stderr() })
}

/// Checks the identity for `f` supported on pairs inside the ball of radius ½.
pub fn changevar_check<T: Real, const D: usize>(
    f: impl Fn(&Vector<T, D>, &Vector<T, D>, T) -> T + Sync,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ChangeVarResult<T>> {
    if D < 2 {
        return Err(Error::InvalidParameter("change of variables needs d >= 2".into()));
    }
    let half = T::lit(0.5);
    let r2 = T::lit(0.25);
    let support = |y: &Vector<T, D>, y2: &Vector<T, D>| y.norm2() < r2 && y2.norm2() < r2;

    let line_vol = T::lit(0.5 * sphere_area(D) * impact_volume(D));
    let lhs = welford_mc(n_samples, workers, |i| {
        let mut rng = stream(seed ^ 0x6c68, i);
        let e = Vector::<T, D>::random_unit(&mut rng);
        let b = Vector::random_in_orthogonal_ball(&e, half, &mut rng);
        let l = T::lit(rng.random::<f64>()) - half;
        let l2 = T::lit(rng.random::<f64>()) - half;
        let (y, y2) = (b + e * l, b + e * l2);
        if !support(&y, &y2) {
            return T::zero();
        }
        line_vol * f(&y, &y2, (l - l2).abs())
    })?;

    let pair_vol = T::lit(pair_weight(D));
    let rhs = welford_mc(n_samples, workers, |i| {
        let mut rng = stream(seed ^ 0x7268, i);
        let p = sample_pair::<T, D, _>(&mut rng);
        if !p.inside {
            return T::zero();
        }
        pair_vol * f(&p.y, &p.y2, p.dist)
    })?;

    let scale = lhs.value.abs().max(rhs.value.abs());
    let rel_diff = if scale == T::zero() { T::zero() } else { (lhs.value - rhs.value).abs() / scale };
    Ok(ChangeVarResult { lhs, rhs, rel_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function_gives_zero() {
        let r = changevar_check::<f64, 2>(|_, _, _| 0.0, 1000, 1, 1).unwrap();
        assert_eq!((r.lhs.value, r.rhs.value, r.rel_diff), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_function_matches_closed_form() {
        // d = 2, f = 1: both sides equal ∫∫‖y−y′‖⁻¹ over the disk of radius ½,
        // which is 16πR³/3 for radius R.
        let r = changevar_check::<f64, 2>(|_, _, _| 1.0, 400_000, 2, 1).unwrap();
        let exact = 16.0 * std::f64::consts::PI * 0.125 / 3.0;
        assert!((r.lhs.value - exact).abs() < 4.0 * r.lhs.stderr + 1e-3, "{r:?}");
        assert!((r.rhs.value - exact).abs() < 4.0 * r.rhs.stderr + 1e-3, "{r:?}");
    }

    #[test]
    fn one_dimension_rejected() {
        assert!(changevar_check::<f64, 1>(|_, _, _| 1.0, 10, 0, 1).is_err());
    }
}
