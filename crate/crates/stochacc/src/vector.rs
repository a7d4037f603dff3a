//! Small fixed-size vectors and rotations for dimensions 1 to 3.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector<T, const D: usize>(pub [T; D]);

impl<T: Real, const D: usize> Default for Vector<T, D> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real, const D: usize> Vector<T, D> {
    pub fn zero() -> Self {
        Self([T::zero(); D])
    }

    pub fn from_fn(f: impl FnMut(usize) -> T) -> Self {
        Self(std::array::from_fn(f))
    }

    /// Unit vector along axis `i`.
    pub fn axis(i: usize) -> Self {
        Self::from_fn(|k| if k == i { T::one() } else { T::zero() })
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..D {
            s = self.0[i].mul_add(other.0[i], s);
        }
        s
    }

    #[inline]
    pub fn norm2(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm2().sqrt()
    }

    /// Returns `self / |self|`; the zero vector maps to itself.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            *self * n.recip()
        } else {
            *self
        }
    }

    /// Component of `self` orthogonal to the unit vector `e`.
    pub fn reject(&self, e: &Self) -> Self {
        *self - *e * self.dot(e)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_fn(|i| f(self.0[i]))
    }

    pub fn cast<U: Real>(&self) -> Vector<U, D> {
        Vector::from_fn(|i| U::lit(self.0[i].as_f64()))
    }

    pub fn to_f64(&self) -> [f64; D] {
        std::array::from_fn(|i| self.0[i].as_f64())
    }

    /// Magnitude of the angular momentum `self × v` (zero in one dimension).
    pub fn cross_norm(&self, v: &Self) -> T {
        match D {
            2 => (self.0[0] * v.0[1] - self.0[1] * v.0[0]).abs(),
            3 => {
                let a = &self.0;
                let b = &v.0;
                let c0 = a[1] * b[2] - a[2] * b[1];
                let c1 = a[2] * b[0] - a[0] * b[2];
                let c2 = a[0] * b[1] - a[1] * b[0];
                (c0 * c0 + c1 * c1 + c2 * c2).sqrt()
            }
            _ => T::zero(),
        }
    }

    /// Uniformly distributed unit vector.
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if D == 1 {
            let s = if rng.random::<bool>() { T::one() } else { -T::one() };
            return Self::from_fn(|_| s);
        }
        loop {
            let g = Self::from_fn(|_| T::lit(StandardNormal.sample(rng)));
            let n = g.norm();
            if n > T::lit(1e-12) {
                return g * n.recip();
            }
        }
    }

    /// Uniform point in the ball of radius `r` of the hyperplane orthogonal to the unit vector `e`.
    pub fn random_in_orthogonal_ball<R: Rng + ?Sized>(e: &Self, r: T, rng: &mut R) -> Self {
        if D == 1 {
            return Self::zero();
        }
        let k = D - 1;
        loop {
            let g = Self::from_fn(|_| T::lit(StandardNormal.sample(rng))).reject(e);
            let n = g.norm();
            if n > T::lit(1e-12) {
                let u: f64 = rng.random();
                let radius = r * T::lit(u.powf(1.0 / k as f64));
                return g * (radius / n);
            }
        }
    }
}

impl<T: Real, const D: usize> Index<usize> for Vector<T, D> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Real, const D: usize> IndexMut<usize> for Vector<T, D> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real, const D: usize> Add for Vector<T, D> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::from_fn(|i| self.0[i] + o.0[i])
    }
}

impl<T: Real, const D: usize> Sub for Vector<T, D> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|i| self.0[i] - o.0[i])
    }
}

impl<T: Real, const D: usize> AddAssign for Vector<T, D> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        for i in 0..D {
            self.0[i] += o.0[i];
        }
    }
}

impl<T: Real, const D: usize> SubAssign for Vector<T, D> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        for i in 0..D {
            self.0[i] -= o.0[i];
        }
    }
}

impl<T: Real, const D: usize> Mul<T> for Vector<T, D> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::from_fn(|i| self.0[i] * s)
    }
}

impl<T: Real, const D: usize> Neg for Vector<T, D> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::from_fn(|i| -self.0[i])
    }
}

/// Rotation matrix in SO(D), stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T, const D: usize>(pub [[T; D]; D]);

impl<T: Real, const D: usize> Rotation<T, D> {
    pub fn identity() -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { T::one() } else { T::zero() })
        }))
    }

    pub fn apply(&self, v: &Vector<T, D>) -> Vector<T, D> {
        Vector::from_fn(|i| {
            let mut s = T::zero();
            for j in 0..D {
                s += self.0[i][j] * v.0[j];
            }
            s
        })
    }

    /// Applies the inverse (transpose).
    pub fn apply_inverse(&self, v: &Vector<T, D>) -> Vector<T, D> {
        Vector::from_fn(|i| {
            let mut s = T::zero();
            for j in 0..D {
                s += self.0[j][i] * v.0[j];
            }
            s
        })
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = T::zero();
                for k in 0..D {
                    s += self.0[i][k] * other.0[k][j];
                }
                s
            })
        }))
    }

    pub fn inverse(&self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    /// Haar-distributed rotation: sign flip in 1d, uniform angle in 2d, uniform unit quaternion in 3d.
    ///
    /// # Panics
    /// For `D > 3`.
    pub fn haar<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut m = Self::identity();
        match D {
            1 => {
                if rng.random::<bool>() {
                    m.0[0][0] = -T::one();
                }
            }
            2 => {
                let theta = T::lit(rng.random::<f64>() * std::f64::consts::TAU);
                let (s, c) = theta.sin_cos();
                m.0[0][0] = c;
                m.0[0][1] = -s;
                m.0[1][0] = s;
                m.0[1][1] = c;
            }
            3 => {
                let q = Vector::<T, 4>::random_unit(rng).0;
                let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
                let two = T::lit(2.0);
                let one = T::one();
                let r = [
                    [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                    [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
                    [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
                ];
                for i in 0..3 {
                    for j in 0..3 {
                        m.0[i][j] = r[i][j];
                    }
                }
            }
            _ => panic!("Haar sampling implemented for dimensions 1 to 3, got {D}"),
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_rotations_are_orthogonal_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = Rotation::<f64, 3>::haar(&mut rng);
            let p = r.compose(&r.inverse());
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p.0[i][j] - want).abs() < 1e-14);
                }
            }
            let a = r.0;
            let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            assert!((det - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn haar_mean_image_of_axis_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut acc = Vector::<f64, 3>::zero();
        for _ in 0..n {
            acc += Rotation::<f64, 3>::haar(&mut rng).apply(&Vector::axis(0));
        }
        // Each component has variance 1/3 per draw.
        let tol = 4.0 * (1.0 / 3.0 / n as f64).sqrt();
        for i in 0..3 {
            assert!((acc[i] / n as f64).abs() < tol);
        }
    }

    #[test]
    fn orthogonal_ball_samples_are_orthogonal_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = Vector::<f64, 3>([0.0, 0.6, 0.8]);
        for _ in 0..1000 {
            let b = Vector::random_in_orthogonal_ball(&e, 0.5, &mut rng);
            assert!(b.dot(&e).abs() < 1e-15);
            assert!(b.norm() <= 0.5 + 1e-15);
        }
    }
}
