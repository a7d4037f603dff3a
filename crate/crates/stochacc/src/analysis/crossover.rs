use serde::{Deserialize, Serialize};

use super::accumulator::{EnsembleSeries, Observable};
use super::fit::fit_power_law;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Half-width of the centered local-slope stencil (five points).
const HALF_STENCIL: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossover<T> {
    pub index: usize,
    pub n_star: T,
    /// Mean elapsed time at the crossover checkpoint, when tracked.
    pub tau_star: Option<T>,
}

/// Centered five-point log-log slopes; `None` near the ends.
pub fn local_slopes<T: Real>(xs: &[T], ys: &[T]) -> Vec<Option<T>> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            if i < HALF_STENCIL || i + HALF_STENCIL >= n {
                return None;
            }
            let r = i - HALF_STENCIL..=i + HALF_STENCIL;
            let zeros = [T::zero(); 2 * HALF_STENCIL + 1];
            fit_power_law(&xs[r.clone()], &ys[r], &zeros).ok().map(|f| f.exponent)
        })
        .collect()
}

/// First checkpoint after which the local slope of `⟨obs⟩` stays within `tol` of `asymptote`.
///
/// `tau_obs` names the observable whose mean gives `tau_star` (defaults to [`Observable::Tau`]).
pub fn detect_crossover<T: Real>(
    series: &EnsembleSeries<T>,
    obs: Observable,
    asymptote: T,
    tol: T,
    tau_obs: Option<Observable>,
) -> Result<Crossover<T>> {
    let rows = series.complete_rows(obs);
    let xs: Vec<T> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.2).collect();
    let slopes = local_slopes(&xs, &ys);
    let defined: Vec<(usize, T)> = slopes.iter().enumerate().filter_map(|(i, s)| s.map(|s| (i, s))).collect();
    if defined.is_empty() {
        return Err(Error::InsufficientData { needed: 2 * HALF_STENCIL + 1, found: rows.len() });
    }
    let mut first_ok = None;
    for &(i, s) in defined.iter().rev() {
        if (s - asymptote).abs() <= tol {
            first_ok = Some(i);
        } else {
            break;
        }
    }
    let mut index = first_ok.ok_or(Error::NoCrossover)?;
    if index == defined[0].0 {
        index = 0;
    }
    let n_star = xs[index];
    let tau_star = series.column(tau_obs.unwrap_or(Observable::Tau)).map(|c| {
        let k = series.grid.points.iter().position(|&p| p == n_star).unwrap_or(index);
        series.stats[k][c].mean
    });
    Ok(Crossover { index, n_star, tau_star })
}
