use rand::Rng;

use crate::lorentz_gas::Phase;
use crate::scalar::Real;
use crate::vector::Vector;

/// Volume of the `k`-ball of radius `r` (`k ≤ 3`).
pub fn ball_volume(k: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 1.0,
        1 => 2.0 * r,
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r * r * r,
        _ => panic!("ball volume implemented for k <= 3"),
    }
}

/// Area of the unit sphere `S^{d−1}` (`d ≤ 3`); two points for `d = 1`.
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere area implemented for d <= 3"),
    }
}

/// `C_d`: volume of the set of impact parameters, the `(d−1)`-ball of radius ½.
pub fn impact_volume(d: usize) -> f64 {
    ball_volume(d - 1, 0.5)
}

/// Uniform point in the ball of radius `r`.
pub fn uniform_in_ball<T: Real, const D: usize, R: Rng + ?Sized>(r: f64, rng: &mut R) -> Vector<T, D> {
    let u: f64 = rng.random();
    Vector::<T, D>::random_unit(rng) * T::lit(r * u.powf(1.0 / D as f64))
}

/// A pair of points in the ball of radius ½ drawn through their midpoint and separation.
///
/// The midpoint is uniform in the ball and the separation length uniform on
/// `[0, 1]` with isotropic direction, so the density absorbs `‖y − y′‖^{1−d}`
/// exactly. `PAIR_WEIGHT` times the integrand then estimates
/// `∫∫ ‖y−y′‖^{1−d} f dy dy′`; pairs leaving the ball contribute zero.
pub struct Pair<T, const D: usize> {
    pub y: Vector<T, D>,
    pub y2: Vector<T, D>,
    /// Unit vector along `y − y′`.
    pub dir: Vector<T, D>,
    pub dist: T,
    pub inside: bool,
}

pub fn pair_weight(d: usize) -> f64 {
    ball_volume(d, 0.5) * sphere_area(d)
}

pub fn sample_pair<T: Real, const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Pair<T, D> {
    let mid: Vector<T, D> = uniform_in_ball(0.5, rng);
    let dist = T::lit(rng.random::<f64>());
    let dir = Vector::<T, D>::random_unit(rng);
    let half = dir * (dist * T::lit(0.5));
    let (y, y2) = (mid + half, mid - half);
    let r2 = T::lit(0.25);
    Pair { y, y2, dir, dist, inside: y.norm2() < r2 && y2.norm2() < r2 }
}

/// Equally spaced phase points shifted by `offset`: `k` for one torus dimension, `k²` for two.
pub fn phase_points<T: Real>(torus_dim: usize, offset: Phase<T>, k: usize) -> Vec<Phase<T>> {
    let step = |i: usize| T::lit(i as f64 / k as f64);
    if torus_dim == 1 {
        (0..k).map(|i| [(offset[0] + step(i)).fract(), offset[1]]).collect()
    } else {
        (0..k * k)
            .map(|i| [(offset[0] + step(i / k)).fract(), (offset[1] + step(i % k)).fract()])
            .collect()
    }
}
