use rand_distr::StandardNormal;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseLaw;
use super::reduced::{reduced_xi_step, ReducedState};
use crate::analysis::{CheckpointGrid, EnsembleSeries, Observable};
use crate::ensemble::{chunked_reduce, CHUNK};
use crate::error::Result;
use crate::scalar::Real;
use crate::seeding::stream;

/// Terminal values `Y_{s_max}` of `dY = 2√Y dB + δ ds` by Euler–Maruyama with full truncation.
pub fn bessel_reference(
    delta: f64,
    y0: f64,
    s_max: f64,
    steps: usize,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let h = s_max / steps as f64;
    let sh = h.sqrt();
    chunked_reduce(
        n_samples,
        CHUNK * 16,
        workers,
        Vec::new,
        |out, i| {
            let mut rng = stream(seed, i);
            let mut y = y0;
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                y += 2.0 * y.max(0.0).sqrt() * sh * z + delta * h;
            }
            out.push(y.max(0.0));
        },
        |a, b| a.extend(b),
    )
}

/// Samples of `ξ_n²/n` after `n` steps of the reduced walk from `xi0`.
pub fn reduced_terminal_samples(
    gamma: f64,
    xi0: f64,
    n: u64,
    noise: NoiseLaw,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    chunked_reduce(
        n_samples,
        CHUNK,
        workers,
        Vec::new,
        |out, i| {
            let mut rng = stream(seed, i);
            let mut s = ReducedState::new(xi0, gamma);
            for _ in 0..n {
                s = reduced_xi_step(s, noise.sample(&mut rng));
            }
            out.push(s.xi * s.xi / n as f64);
        },
        |a, b| a.extend(b),
    )
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Parameters of a reduced-walk ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedEnsemble<T> {
    pub n_walks: u64,
    pub xi0: T,
    pub gamma: T,
    pub noise: NoiseLaw,
    pub grid: CheckpointGrid<T>,
    pub master_seed: u64,
    pub boundary_limit: f64,
    /// `‖v‖²` as a power of `ξ` times a constant: `(scale, exponent)`.
    pub speed2_map: (T, T),
}

/// Moments of `ξ_n`, `ξ_n²` and `‖v_n‖²` on a collision grid.
pub fn run_reduced_ensemble<T: Real>(cfg: &ReducedEnsemble<T>, workers: usize) -> Result<EnsembleSeries<T>> {
    let template = EnsembleSeries::new(cfg.grid.clone(), vec![Observable::Xi, Observable::Xi2, Observable::V2]);
    let last = cfg.grid.last().as_f64() as u64;
    chunked_reduce(
        cfg.n_walks,
        CHUNK,
        workers,
        || template.clone(),
        |out, i| {
            let mut rng = stream(cfg.master_seed, i);
            let mut s = ReducedState::new(cfg.xi0, cfg.gamma);
            let mut buf = out.buffer();
            for _ in 0..last {
                s = reduced_xi_step(s, T::lit(cfg.noise.sample(&mut rng)));
                if cfg.grid.points.get(buf.filled()) == Some(&T::lit(s.n as f64)) {
                    let (k, p) = cfg.speed2_map;
                    buf.push(&[s.xi, s.xi * s.xi, k * s.xi.powf(p)]);
                }
            }
            if s.boundary_fraction() > cfg.boundary_limit {
                out.exclude(super::walk::BOUNDARY_FLAG);
            } else {
                out.commit(&buf);
            }
        },
        |a, b| a.merge(&b).expect("identical grids"),
    )
}
