use serde::{Deserialize, Serialize};

use super::accumulator::{EnsembleSeries, Observable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of checkpoints inside a fit window.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    pub intercept: T,
    pub x_lo: T,
    pub x_hi: T,
    /// Residual RMS in log-log coordinates.
    pub rms: T,
    pub stderr: T,
    pub points: usize,
}

/// Which checkpoints enter a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy<T> {
    /// `[x_max/10, x_max]`.
    LastDecade,
    /// The last `decades` decades.
    LastDecades(T),
    Range { lo: T, hi: T },
    /// From the detected crossover to the end, falling back to the last decade.
    AfterCrossover { asymptote: T, tol: T },
}

/// Weighted least squares of `ln y` against `ln x`.
///
/// `sigma_y` are standard errors of `y`; when any is zero the fit is unweighted.
/// The exponent error is inflated by the reduced chi-square when that exceeds one.
pub fn fit_power_law<T: Real>(xs: &[T], ys: &[T], sigma_y: &[T]) -> Result<PowerLawFit<T>> {
    let n = xs.len();
    if n < 2 || ys.len() != n || sigma_y.len() != n {
        return Err(Error::InsufficientData { needed: 2, found: n });
    }
    if xs.iter().chain(ys).any(|&v| v <= T::zero() || !v.is_finite()) {
        return Err(Error::InvalidParameter("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let weighted = sigma_y.iter().all(|&s| s > T::zero());
    let w: Vec<T> = if weighted {
        sigma_y.iter().zip(ys).map(|(&s, &y)| (y / s).powi(2)).collect()
    } else {
        vec![T::one(); n]
    };
    let sw: T = w.iter().copied().sum();
    let mx = lx.iter().zip(&w).map(|(&x, &w)| w * x).sum::<T>() / sw;
    let my = ly.iter().zip(&w).map(|(&y, &w)| w * y).sum::<T>() / sw;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for i in 0..n {
        let dx = lx[i] - mx;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (ly[i] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = T::zero();
    let mut chi2 = T::zero();
    for i in 0..n {
        let r = ly[i] - (intercept + slope * lx[i]);
        rss += r * r;
        chi2 += w[i] * r * r;
    }
    let dof = T::lit((n.max(3) - 2) as f64);
    let stderr = if weighted {
        (T::one() / sxx).sqrt() * (chi2 / dof).sqrt().max(T::one())
    } else {
        (rss / dof / sxx).sqrt()
    };
    Ok(PowerLawFit {
        exponent: slope,
        intercept,
        x_lo: xs[0],
        x_hi: xs[n - 1],
        rms: (rss / T::lit(n as f64)).sqrt(),
        stderr,
        points: n,
    })
}

/// Fits `⟨obs⟩ ∝ x^a` over checkpoints reached by every included trajectory.
pub fn fit_exponent<T: Real>(
    series: &EnsembleSeries<T>,
    obs: Observable,
    policy: WindowPolicy<T>,
) -> Result<PowerLawFit<T>> {
    let rows = series.complete_rows(obs);
    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, found: 0 });
    }
    let x_max = rows[rows.len() - 1].0;
    let (lo, hi) = match policy {
        WindowPolicy::LastDecade => (x_max / T::lit(10.0), x_max),
        WindowPolicy::LastDecades(k) => (x_max / T::lit(10.0).powf(k), x_max),
        WindowPolicy::Range { lo, hi } => (lo, hi),
        WindowPolicy::AfterCrossover { asymptote, tol } => {
            match super::crossover::detect_crossover(series, obs, asymptote, tol, None) {
                Ok(c) if c.n_star <= x_max / T::lit(10.0) => (c.n_star, x_max),
                _ => (x_max / T::lit(10.0), x_max),
            }
        }
    };
    // Guard against round-off on the window edges.
    let eps = T::lit(1e-9);
    let sel: Vec<_> = rows
        .into_iter()
        .filter(|r| r.0 >= lo * (T::one() - eps) && r.0 <= hi * (T::one() + eps))
        .collect();
    if sel.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, found: sel.len() });
    }
    let xs: Vec<T> = sel.iter().map(|r| r.0).collect();
    let ys: Vec<T> = sel.iter().map(|r| r.2).collect();
    let ss: Vec<T> = sel.iter().map(|r| r.3).collect();
    fit_power_law(&xs, &ys, &ss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::grid::{CheckpointGrid, GridKind};

    #[test]
    fn exact_power_law_is_recovered() {
        let xs: Vec<f64> = (0..17).map(|k| 10f64.powf(k as f64 / 8.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.4)).collect();
        let f = fit_power_law(&xs, &ys, &vec![0.0; xs.len()]).unwrap();
        assert!((f.exponent - 0.4).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn series_fit_uses_last_decade() {
        let grid = CheckpointGrid::<f64>::geometric(GridKind::ByTime, 1.0, 1e3, 8).unwrap();
        let mut s = EnsembleSeries::new(grid.clone(), vec![Observable::Y2]);
        let mut buf = s.buffer();
        for &x in &grid.points {
            buf.push(&[if x < 50.0 { x } else { 0.02 * x * x }]);
        }
        s.commit(&buf);
        let f = fit_exponent(&s, Observable::Y2, WindowPolicy::LastDecade).unwrap();
        assert_eq!(f.points, 9);
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(matches!(
            fit_exponent(&s, Observable::Y2, WindowPolicy::Range { lo: 1.0, hi: 2.0 }),
            Err(Error::InsufficientData { .. })
        ));
    }
}
