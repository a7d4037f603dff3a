use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::Vector;

/// Integer lattice coordinates; the chain uses only the first entry.
pub type Site = [i64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Chain1d,
    Hexagonal2d,
}

/// Geometry of a periodic array of disks of radius `y_star`.
///
/// Positions are handled relative to a site center so that precision does
/// not degrade as the particle wanders far from the origin.
pub trait Lattice<T: Real, const D: usize>: Clone + Send + Sync {
    fn kind(&self) -> LatticeKind;

    fn radius(&self) -> T;

    /// Upper bound on the free-flight length between disks.
    fn horizon(&self) -> T;

    fn center(&self, site: Site) -> Vector<T, D>;

    /// `center(to) - center(from)`, computed from the integer difference.
    fn displacement(&self, from: Site, to: Site) -> Vector<T, D>;

    /// First disk other than `from` met by the ray `p + s·dir`, `0 < s <= max_dist`,
    /// where `p` is measured from the center of `from` and `dir` is a unit vector.
    fn first_hit(&self, from: Site, p: &Vector<T, D>, dir: &Vector<T, D>, max_dist: T)
        -> Option<(Site, T)>;
}

/// Intervals `[i - y_star, i + y_star]` centered on the integers.
#[derive(Clone, Debug)]
pub struct Chain<T> {
    y_star: T,
}

impl<T: Real> Chain<T> {
    pub fn new(y_star: T) -> Result<Self> {
        if !(y_star > T::zero() && y_star < T::lit(0.5)) {
            return Err(Error::InvalidRadius { y_star: y_star.as_f64(), lo: 0.0, hi: 0.5 });
        }
        Ok(Self { y_star })
    }
}

impl<T: Real> Lattice<T, 1> for Chain<T> {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Chain1d
    }

    fn radius(&self) -> T {
        self.y_star
    }

    fn horizon(&self) -> T {
        T::one() - self.y_star - self.y_star
    }

    fn center(&self, site: Site) -> Vector<T, 1> {
        Vector([T::lit(site[0] as f64)])
    }

    fn displacement(&self, from: Site, to: Site) -> Vector<T, 1> {
        Vector([T::lit((to[0] - from[0]) as f64)])
    }

    fn first_hit(&self, from: Site, p: &Vector<T, 1>, dir: &Vector<T, 1>, max_dist: T) -> Option<(Site, T)> {
        let step = if dir[0] > T::zero() { 1 } else { -1 };
        let sign = T::lit(step as f64);
        let s = T::one() - self.y_star - sign * p[0];
        (s <= max_dist).then_some(([from[0] + step, 0], s.max(T::zero())))
    }
}

/// Triangular arrangement of centers `a·(1,0) + b·(1/2, √3/2)`.
#[derive(Clone, Debug)]
pub struct Hexagonal<T> {
    y_star: T,
    row: T,
    horizon: T,
}

impl<T: Real> Hexagonal<T> {
    /// Rejects radii outside `(√3/4, 1/2)`, where the horizon would be infinite or disks overlap.
    pub fn new(y_star: T) -> Result<Self> {
        let lo = 3f64.sqrt() / 4.0;
        if !(y_star > T::lit(lo) && y_star < T::lit(0.5)) {
            return Err(Error::InvalidRadius { y_star: y_star.as_f64(), lo, hi: 0.5 });
        }
        let mut lat = Self { y_star, row: T::lit(3f64.sqrt() / 2.0), horizon: T::lit(4.0) };
        lat.horizon = lat.estimate_horizon();
        Ok(lat)
    }

    /// Longest free flight found by scanning rays leaving the origin disk, with a 10% margin.
    fn estimate_horizon(&self) -> T {
        let n = 181;
        let mut longest = T::zero();
        let search = T::lit(4.0);
        for i in 0..n {
            let theta = T::lit(std::f64::consts::TAU * i as f64 / n as f64);
            let (s, c) = theta.sin_cos();
            let p = Vector([c * self.y_star, s * self.y_star]);
            for j in 1..n {
                let psi = theta + T::lit(std::f64::consts::PI * (j as f64 / n as f64 - 0.5));
                let (sd, cd) = psi.sin_cos();
                let dir = Vector([cd, sd]);
                if let Some((_, dist)) = self.first_hit([0, 0], &p, &dir, search) {
                    longest = longest.max(dist);
                }
            }
        }
        longest * T::lit(1.1)
    }
}

impl<T: Real> Lattice<T, 2> for Hexagonal<T> {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Hexagonal2d
    }

    fn radius(&self) -> T {
        self.y_star
    }

    fn horizon(&self) -> T {
        self.horizon
    }

    fn center(&self, site: Site) -> Vector<T, 2> {
        self.displacement([0, 0], site)
    }

    fn displacement(&self, from: Site, to: Site) -> Vector<T, 2> {
        let a = (to[0] - from[0]) as f64;
        let b = (to[1] - from[1]) as f64;
        Vector([T::lit(a + 0.5 * b), T::lit(b) * self.row])
    }

    fn first_hit(&self, from: Site, p: &Vector<T, 2>, dir: &Vector<T, 2>, max_dist: T) -> Option<(Site, T)> {
        let r = self.y_star;
        let r2 = r * r;
        let end = *p + *dir * max_dist;
        let (ylo, yhi) = (p[1].min(end[1]), p[1].max(end[1]));
        let b_lo = ((ylo - r) / self.row).ceil().to_i64()?;
        let b_hi = ((yhi + r) / self.row).floor().to_i64()?;
        let mut best: Option<(Site, T)> = None;
        for b in b_lo..=b_hi {
            let bf = T::lit(b as f64);
            let y_row = bf * self.row;
            // Portion of the segment whose height is within r of this row.
            let (x0, x1) = if dir[1].abs() < T::lit(1e-300) {
                (p[0].min(end[0]), p[0].max(end[0]))
            } else {
                let t1 = (y_row - r - p[1]) / dir[1];
                let t2 = (y_row + r - p[1]) / dir[1];
                let lo = t1.min(t2).max(T::zero());
                let hi = t1.max(t2).min(max_dist);
                if lo > hi {
                    continue;
                }
                let xa = p[0] + dir[0] * lo;
                let xb = p[0] + dir[0] * hi;
                (xa.min(xb), xa.max(xb))
            };
            let shift = T::lit(0.5 * b as f64);
            let a_lo = (x0 - r - shift).ceil().to_i64()?;
            let a_hi = (x1 + r - shift).floor().to_i64()?;
            for a in a_lo..=a_hi {
                if a == 0 && b == 0 {
                    continue;
                }
                let c = Vector([T::lit(a as f64) + shift, y_row]);
                let w = c - *p;
                let t = w.dot(dir);
                if t <= T::zero() {
                    continue;
                }
                let perp2 = w.norm2() - t * t;
                if perp2 >= r2 {
                    continue;
                }
                let s = t - (r2 - perp2).sqrt();
                if s <= max_dist && best.is_none_or(|(_, d)| s < d) {
                    best = Some(([from[0] + a, from[1] + b], s.max(T::zero())));
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagonal_rejects_open_horizon_radius() {
        assert!(matches!(Hexagonal::new(0.40_f64), Err(Error::InvalidRadius { .. })));
        assert!(Hexagonal::new(0.5_f64).is_err());
        assert!(Hexagonal::new(0.45_f64).is_ok());
    }

    #[test]
    fn chain_radius_bounds() {
        assert!(Chain::new(0.0_f64).is_err());
        assert!(Chain::new(0.25_f64).is_ok());
    }

    #[test]
    fn horizon_is_finite_and_below_two() {
        let lat = Hexagonal::new(0.45_f64).unwrap();
        assert!(lat.horizon() > 0.1 && lat.horizon() < 2.0, "{}", lat.horizon());
    }

    #[test]
    fn ray_between_neighbours_hits_the_next_center() {
        let lat = Hexagonal::new(0.45_f64).unwrap();
        let (site, s) = lat.first_hit([0, 0], &Vector([0.5, 0.0]), &Vector([1.0, 0.0]), 2.0).unwrap();
        assert_eq!(site, [1, 0]);
        assert!((s - 0.05).abs() < 1e-15);
    }

    #[test]
    fn hits_are_translation_covariant() {
        let lat = Hexagonal::new(0.45_f64).unwrap();
        let p = Vector([0.3, 0.35]);
        let dir = Vector([0.6, 0.8]);
        let (s1, d1) = lat.first_hit([0, 0], &p, &dir, 2.0).unwrap();
        let (s2, d2) = lat.first_hit([5, -3], &p, &dir, 2.0).unwrap();
        assert_eq!([s1[0] + 5, s1[1] - 3], s2);
        assert_eq!(d1, d2);
    }
}
