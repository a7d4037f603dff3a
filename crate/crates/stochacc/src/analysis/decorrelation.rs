use serde::{Deserialize, Serialize};

use super::accumulator::{EnsembleSeries, Observable};
use super::fit::{fit_power_law, PowerLawFit};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest lag used for the initial slope.
pub const MAX_LAG: f64 = 10.0;
/// Lags past the point where the overlap drops below this are outside the linear regime.
pub const LINEAR_FLOOR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decorrelation<T> {
    Decay { m_star: T, slope: T, lags: usize },
    NoDecay,
}

/// Initial slope of `⟨e_m·e₀⟩` against the lag `m`.
///
/// Fits `1 − ⟨e_m·e₀⟩ = s·m` through the exact value at `m = 0`, using lags up
/// to [`MAX_LAG`] while the overlap stays above [`LINEAR_FLOOR`] (at least the first lag).
pub fn initial_slope<T: Real>(lags: &[T], overlap: &[T]) -> Result<Decorrelation<T>> {
    let mut num = T::zero();
    let mut den = T::zero();
    let mut used = 0;
    for (&m, &c) in lags.iter().zip(overlap) {
        if m <= T::zero() {
            continue;
        }
        if m > T::lit(MAX_LAG) || (used > 0 && c < T::lit(LINEAR_FLOOR)) {
            break;
        }
        num += m * (T::one() - c);
        den += m * m;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    let s = num / den;
    if s <= T::lit(1e-12) {
        return Ok(Decorrelation::NoDecay);
    }
    Ok(Decorrelation::Decay { m_star: s.recip(), slope: -s, lags: used })
}

/// `M*` for each `(v0, series)` pair plus the log-log fit of `M*` against `v0`.
pub fn direction_decorrelation<T: Real>(
    runs: &[(T, &EnsembleSeries<T>)],
) -> Result<(Vec<(T, Decorrelation<T>)>, Option<PowerLawFit<T>>)> {
    let mut table = Vec::with_capacity(runs.len());
    for &(v0, series) in runs {
        let rows = series.complete_rows(Observable::Align);
        let lags: Vec<T> = rows.iter().map(|r| r.0).collect();
        let c: Vec<T> = rows.iter().map(|r| r.2).collect();
        table.push((v0, initial_slope(&lags, &c)?));
    }
    let pts: Vec<(T, T)> = table
        .iter()
        .filter_map(|(v, d)| match d {
            Decorrelation::Decay { m_star, .. } => Some((*v, *m_star)),
            Decorrelation::NoDecay => None,
        })
        .collect();
    let fit = if pts.len() >= 2 {
        let xs: Vec<T> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<T> = pts.iter().map(|p| p.1).collect();
        Some(fit_power_law(&xs, &ys, &vec![T::zero(); xs.len()])?)
    } else {
        None
    };
    Ok((table, fit))
}
