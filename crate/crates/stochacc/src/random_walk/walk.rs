use serde::{Deserialize, Serialize};

use super::kick::KickModel;
use crate::analysis::{CheckpointGrid, EnsembleSeries, GridKind, Observable};
use crate::ensemble::{chunked_reduce, EnsembleOutput, Recorder, CHUNK};
use crate::error::{Error, Result};
use crate::lorentz_gas::MIN_SPEED;
use crate::scalar::{CompensatedTime, Real};
use crate::seeding::stream;
use crate::vector::Vector;

/// State of the momentum/position walk after `n` kicks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkState<T, const D: usize> {
    pub v: Vector<T, D>,
    pub tau: CompensatedTime<T>,
    pub y: Vector<T, D>,
    pub n: u64,
    pub e: Vector<T, D>,
}

impl<T: Real, const D: usize> WalkState<T, D> {
    pub fn new(v: Vector<T, D>) -> Self {
        Self { v, tau: CompensatedTime::new(T::zero()), y: Vector::zero(), n: 0, e: v.normalized() }
    }

    pub fn speed(&self) -> T {
        self.v.norm()
    }
}

/// Kick, then fly a distance `eta_star` in the new direction.
///
/// Returns the new state and whether the kick touched the reduced-variable floor.
#[inline]
pub fn full_walk_step<T: Real, const D: usize>(
    s: &WalkState<T, D>,
    kick: &KickModel<T, D>,
    eta_star: T,
    rng: &mut dyn rand::RngCore,
) -> Result<(WalkState<T, D>, bool)> {
    let k = kick.apply(&s.v, &s.tau, rng)?;
    let speed = k.v.norm();
    if !(speed >= T::lit(MIN_SPEED)) {
        return Err(Error::DegenerateVelocity { speed: speed.as_f64() });
    }
    let e = k.v * speed.recip();
    let mut tau = s.tau;
    tau.advance(eta_star / speed);
    Ok((WalkState { v: k.v, tau, y: s.y + e * eta_star, n: s.n + 1, e }, k.boundary_hit))
}

/// Parameters of a walk ensemble at one initial speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkEnsemble<T> {
    pub n_walks: u64,
    pub speed: T,
    pub eta_star: T,
    /// Walks stop once both limits that are set have been reached.
    pub max_steps: Option<u64>,
    pub max_time: Option<T>,
    pub n_grid: Option<CheckpointGrid<T>>,
    pub t_grid: Option<CheckpointGrid<T>>,
    pub master_seed: u64,
    /// Walks reflected at the floor on more than this fraction of steps are excluded.
    pub boundary_limit: f64,
}

impl<T: Real> WalkEnsemble<T> {
    fn done(&self, n: u64, tau: T) -> bool {
        let n_ok = self.max_steps.is_none_or(|m| n >= m);
        let t_ok = self.max_time.is_none_or(|t| tau >= t);
        n_ok && t_ok
    }
}

pub const BOUNDARY_FLAG: &str = "boundary";

/// Runs independent walks and records the same checkpoint series as lattice ensembles.
pub fn run_walk_ensemble<T: Real, const D: usize>(
    kick: &KickModel<T, D>,
    cfg: &WalkEnsemble<T>,
    workers: usize,
) -> Result<EnsembleOutput<T>> {
    if cfg.max_steps.is_none() && cfg.max_time.is_none() {
        return Err(Error::InvalidParameter("walk needs max_steps or max_time".into()));
    }
    let template = EnsembleOutput::new(cfg.n_grid.as_ref(), cfg.t_grid.as_ref());
    chunked_reduce(
        cfg.n_walks,
        CHUNK,
        workers,
        || template.clone(),
        |out, i| {
            let mut rng = stream(cfg.master_seed, i);
            let v0 = Vector::<T, D>::random_unit(&mut rng) * cfg.speed;
            let mut s = WalkState::new(v0);
            let e0 = s.e;
            let mut rec = Recorder::new(&template);
            let mut hits = 0u64;
            let mut flag = None;
            while !cfg.done(s.n, s.tau.value()) {
                let (next, hit) = match full_walk_step(&s, kick, cfg.eta_star, &mut rng) {
                    Ok(x) => x,
                    Err(e) => {
                        flag = Some(match e {
                            Error::TrappedUnresolved { .. } => "trapped_unresolved",
                            _ => "degenerate_velocity",
                        });
                        break;
                    }
                };
                hits += hit as u64;
                // The flight after kick n+1 spans [τ_n, τ_{n+1}] at velocity v_{n+1}.
                while let Some(t) = rec.next_t() {
                    if t > next.tau.value() {
                        break;
                    }
                    let y = s.y + next.v * (t - s.tau.value()).max(T::zero());
                    rec.push_t(next.v.norm2(), y.norm2(), T::lit(s.n as f64), next.e.dot(&e0));
                }
                s = next;
                if rec.next_n() == Some(T::lit(s.n as f64)) {
                    rec.push_n(s.v.norm2(), s.y.norm2(), s.tau.value(), s.e.dot(&e0));
                }
            }
            out.counters.collisions += s.n;
            out.counters.boundary_hits += hits;
            if flag.is_none() && s.n > 0 && hits as f64 > cfg.boundary_limit * s.n as f64 {
                flag = Some(BOUNDARY_FLAG);
            }
            out.record(&rec, flag);
        },
        |a, b| a.merge(b),
    )
}

/// Direction overlap `⟨e_{n₀+m}·e_{n₀}⟩` at lags `m` on `lags`, together with `‖v_{n₀}‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats<T> {
    pub start: u64,
    pub speed_at_start: T,
    pub series: EnsembleSeries<T>,
}

/// Runs `cfg.n_walks` walks for `start + max lag` steps and measures the direction overlap.
pub fn direction_walk_stats<T: Real, const D: usize>(
    kick: &KickModel<T, D>,
    cfg: &WalkEnsemble<T>,
    start: u64,
    lags: &CheckpointGrid<T>,
    workers: usize,
) -> Result<DirectionStats<T>> {
    if D < 2 {
        return Err(Error::InvalidParameter("direction statistics need d >= 2".into()));
    }
    if lags.kind != GridKind::ByCollision {
        return Err(Error::InvalidParameter("lags must be a collision grid".into()));
    }
    let template = EnsembleSeries::new(lags.clone(), vec![Observable::Align, Observable::V]);
    let m_max = lags.last().as_f64() as u64;
    let (series, speed) = chunked_reduce(
        cfg.n_walks,
        CHUNK,
        workers,
        || (template.clone(), crate::analysis::Welford::new()),
        |(out, sp), i| {
            let mut rng = stream(cfg.master_seed, i);
            let mut s = WalkState::new(Vector::<T, D>::random_unit(&mut rng) * cfg.speed);
            let mut buf = out.buffer();
            let mut e_ref = s.e;
            for _ in 0..start + m_max {
                match full_walk_step(&s, kick, cfg.eta_star, &mut rng) {
                    Ok((next, _)) => s = next,
                    Err(_) => {
                        out.exclude("degenerate_velocity");
                        return;
                    }
                }
                if s.n == start {
                    e_ref = s.e;
                    sp.push(s.speed());
                }
                if s.n > start && lags.points.get(buf.filled()) == Some(&T::lit((s.n - start) as f64)) {
                    buf.push(&[s.e.dot(&e_ref), s.speed()]);
                }
            }
            out.commit(&buf);
        },
        |(a, sa), (b, sb)| {
            a.merge(&b).expect("identical grids");
            sa.merge(&sb);
        },
    )?;
    Ok(DirectionStats { start, speed_at_start: if start == 0 { cfg.speed } else { speed.mean }, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kick_moves_straight() {
        let k = KickModel::<f64, 2>::zero();
        let mut s = WalkState::new(Vector([3.0, 4.0]));
        let mut rng = stream(0, 0);
        for _ in 0..10 {
            s = full_walk_step(&s, &k, 1.5, &mut rng).unwrap().0;
        }
        assert_eq!(s.v, Vector([3.0, 4.0]));
        assert!((s.tau.value() - 10.0 * 1.5 / 5.0).abs() < 1e-14);
        assert!((s.y - Vector([0.6, 0.8]) * 15.0).norm() < 1e-12);
    }

    #[test]
    fn zero_kick_keeps_direction() {
        let k = KickModel::<f64, 2>::zero();
        let lags = CheckpointGrid::geometric(GridKind::ByCollision, 1.0, 100.0, 4).unwrap();
        let cfg = WalkEnsemble {
            n_walks: 20,
            speed: 1.0,
            eta_star: 1.0,
            max_steps: Some(100),
            max_time: None,
            n_grid: None,
            t_grid: None,
            master_seed: 1,
            boundary_limit: 1e-3,
        };
        let st = direction_walk_stats(&k, &cfg, 5, &lags, 1).unwrap();
        for r in st.series.rows(Observable::Align) {
            assert!((r.2 - 1.0).abs() < 1e-14);
        }
    }
}
