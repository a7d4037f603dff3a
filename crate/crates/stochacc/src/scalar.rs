use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every value used by the crate is representable.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline(always)]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Error-free sum of two floats (Knuth's TwoSum): returns `(s, e)` with `a + b = s + e` exactly.
#[inline]
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Time variable carried as an unevaluated sum `hi + lo`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedTime<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Real> CompensatedTime<T> {
    pub fn new(t: T) -> Self {
        Self { hi: t, lo: T::zero() }
    }

    pub fn value(&self) -> T {
        self.hi + self.lo
    }

    pub fn advance(&mut self, dt: T) {
        let (s, e) = two_sum(self.hi, dt);
        let (hi, lo) = two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn advanced(mut self, dt: T) -> Self {
        self.advance(dt);
        self
    }

    /// `self - other` evaluated with both parts.
    pub fn since(&self, other: &Self) -> T {
        (self.hi - other.hi) + (self.lo - other.lo)
    }

    /// Fractional part of `phase0 + omega * self`, accurate even when `omega * self` is large.
    pub fn phase(&self, phase0: T, omega: T) -> T {
        let p = omega * self.hi;
        let err = omega.mul_add(self.hi, -p);
        let whole = p - p.floor();
        let x = phase0 + whole + (err + omega * self.lo);
        x - x.floor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0e16_f64, 1.0);
        assert_eq!(s, 1.0e16);
        assert_eq!(e, 1.0);
    }

    #[test]
    fn compensated_time_keeps_small_increments() {
        let mut t = CompensatedTime::new(1.0e8_f64);
        for _ in 0..1000 {
            t.advance(1.0e-9);
        }
        assert!((t.since(&CompensatedTime::new(1.0e8)) - 1.0e-6).abs() < 1e-18);
    }

    #[test]
    fn phase_matches_direct_evaluation_for_small_times() {
        let t = CompensatedTime::new(0.3_f64);
        let ph = t.phase(0.9, 2.0);
        assert!((ph - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phase_is_accurate_at_large_times() {
        let mut t = CompensatedTime::new(0.0_f64);
        for _ in 0..1_000_000 {
            t.advance(0.1);
        }
        // 10^6 increments of 0.1 (as stored in binary) plus an irrational frequency.
        let omega = 2.0_f64.sqrt();
        let ph = t.phase(0.0, omega);
        assert!((0.0..1.0).contains(&ph));
        let t32 = CompensatedTime::<f32>::new(3.25);
        assert!((t32.phase(0.5, 1.0) - 0.75).abs() < 1e-6);
    }
}
