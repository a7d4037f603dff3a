//! Deterministic parallel execution of independent trajectories.
//!
//! Work is cut into fixed-size chunks that do not depend on the worker count.
//! Each chunk accumulates its trajectories in index order and the chunk results
//! are merged in chunk order, so the output is bit-identical for any number of
//! workers.

use serde::{Deserialize, Serialize};

use crate::analysis::{kinematic_values, CheckpointGrid, EnsembleSeries, Observable, TrajectoryBuffer};
use crate::error::{Error, Result};
use crate::lorentz_gas::{
    run_trajectory, sample_initial, CollisionEvent, Lattice, Observer, ParticleState, ScattererField, StopRule,
};
use crate::scalar::Real;
use crate::seeding::{hash_words, stream};
use crate::vector::Vector;

/// Trajectories per work item.
pub const CHUNK: u64 = 16;
/// Work-item size for cheap Monte Carlo samples.
pub const SAMPLE_CHUNK: u64 = 4096;

const FIELD_DOMAIN: u64 = 0x4649_454c;

/// Folds `n` indexed items in parallel, `chunk` at a time, and merges chunk results in order.
pub fn chunked_reduce<A, I, F, M>(n: u64, chunk: u64, workers: usize, init: I, fold: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    use rayon::prelude::*;
    let chunk = chunk.max(1);
    let chunks = n.div_ceil(chunk);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let parts: Vec<A> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                for i in c * chunk..((c + 1) * chunk).min(n) {
                    fold(&mut acc, i);
                }
                acc
            })
            .collect()
    });
    let mut it = parts.into_iter();
    let mut total = it.next().unwrap_or_else(&init);
    for p in it {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Event counters summed over an ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub collisions: u64,
    pub reflections: u64,
    pub trapped_escapes: u64,
    pub internal_bounces: u64,
    /// Reduced-variable reflections in surrogate walks.
    #[serde(default)]
    pub boundary_hits: u64,
}

impl Counters {
    fn add(&mut self, o: &Self) {
        self.collisions += o.collisions;
        self.reflections += o.reflections;
        self.trapped_escapes += o.trapped_escapes;
        self.internal_bounces += o.internal_bounces;
        self.boundary_hits += o.boundary_hits;
    }
}

/// Checkpointed output of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutput<T> {
    pub by_n: Option<EnsembleSeries<T>>,
    pub by_tau: Option<EnsembleSeries<T>>,
    pub counters: Counters,
}

impl<T: Real> EnsembleOutput<T> {
    pub fn new(n_grid: Option<&CheckpointGrid<T>>, t_grid: Option<&CheckpointGrid<T>>) -> Self {
        let obs = Observable::KINEMATIC.to_vec();
        let mut t_obs = obs.clone();
        t_obs[6] = Observable::N;
        Self {
            by_n: n_grid.map(|g| EnsembleSeries::new(g.clone(), obs)),
            by_tau: t_grid.map(|g| EnsembleSeries::new(g.clone(), t_obs)),
            counters: Counters::default(),
        }
    }

    pub fn merge(&mut self, other: Self) {
        if let (Some(a), Some(b)) = (self.by_n.as_mut(), other.by_n.as_ref()) {
            a.merge(b).expect("identical grids");
        }
        if let (Some(a), Some(b)) = (self.by_tau.as_mut(), other.by_tau.as_ref()) {
            a.merge(b).expect("identical grids");
        }
        self.counters.add(&other.counters);
    }

    /// Commits or excludes one trajectory's buffers.
    pub fn record(&mut self, rec: &Recorder<'_, T>, flag: Option<&str>) {
        for (series, buf) in [(self.by_n.as_mut(), &rec.by_n), (self.by_tau.as_mut(), &rec.by_tau)] {
            if let (Some(s), Some(b)) = (series, buf) {
                match flag {
                    Some(f) => s.exclude(f),
                    None => s.commit(b),
                }
            }
        }
    }
}

/// Per-trajectory checkpoint buffers for collision and time grids.
pub struct Recorder<'g, T> {
    n_points: &'g [T],
    t_points: &'g [T],
    pub by_n: Option<TrajectoryBuffer<T>>,
    pub by_tau: Option<TrajectoryBuffer<T>>,
}

impl<'g, T: Real> Recorder<'g, T> {
    pub fn new(out: &'g EnsembleOutput<T>) -> Self {
        Self {
            n_points: out.by_n.as_ref().map_or(&[][..], |s| &s.grid.points[..]),
            t_points: out.by_tau.as_ref().map_or(&[][..], |s| &s.grid.points[..]),
            by_n: out.by_n.as_ref().map(|s| s.buffer()),
            by_tau: out.by_tau.as_ref().map(|s| s.buffer()),
        }
    }

    /// Next collision index at which a record is wanted.
    pub fn next_n(&self) -> Option<T> {
        let b = self.by_n.as_ref()?;
        self.n_points.get(b.filled()).copied()
    }

    pub fn next_t(&self) -> Option<T> {
        let b = self.by_tau.as_ref()?;
        self.t_points.get(b.filled()).copied()
    }

    pub fn push_n(&mut self, speed2: T, dist2: T, tau: T, align: T) {
        if let Some(b) = self.by_n.as_mut() {
            b.push(&kinematic_values(speed2, dist2, tau, align));
        }
    }

    pub fn push_t(&mut self, speed2: T, dist2: T, n: T, align: T) {
        if let Some(b) = self.by_tau.as_mut() {
            b.push(&kinematic_values(speed2, dist2, n, align));
        }
    }

    pub fn reset(&mut self) {
        self.by_n.iter_mut().chain(self.by_tau.iter_mut()).for_each(|b| b.clear());
    }
}

/// Parameters of a lattice ensemble at one initial speed.
#[derive(Clone, Debug)]
pub struct LatticeEnsemble<T> {
    pub n_trajectories: u64,
    pub speed: T,
    pub stop: StopRule<T>,
    pub n_grid: Option<CheckpointGrid<T>>,
    pub t_grid: Option<CheckpointGrid<T>>,
    pub max_internal_bounces: usize,
    pub master_seed: u64,
    /// Give each trajectory its own field realization.
    pub field_per_trajectory: bool,
}

struct LatticeObserver<'a, 'g, T: Real, L, const D: usize> {
    rec: &'a mut Recorder<'g, T>,
    lattice: &'a L,
    y0: Vector<T, D>,
    e0: Vector<T, D>,
}

impl<T: Real, L: Lattice<T, D>, const D: usize> Observer<T, D> for LatticeObserver<'_, '_, T, L, D> {
    fn on_event(&mut self, ev: &CollisionEvent<T, D>, after: &ParticleState<T, D>) {
        if self.rec.next_n() == Some(T::lit(ev.n as f64)) {
            let y = after.position(self.lattice) - self.y0;
            let align = after.v.normalized().dot(&self.e0);
            self.rec.push_n(after.v.norm2(), y.norm2(), after.tau.value(), align);
        }
    }

    fn next_time_checkpoint(&self) -> Option<T> {
        self.rec.next_t()
    }

    fn on_time_checkpoint(&mut self, _tau: T, y: Vector<T, D>, v: Vector<T, D>, collisions: u64) {
        let d = y - self.y0;
        let align = v.normalized().dot(&self.e0);
        self.rec.push_t(v.norm2(), d.norm2(), T::lit(collisions as f64), align);
    }
}

/// Runs `cfg.n_trajectories` independent particles through `field`.
pub fn run_lattice_ensemble<T: Real, L: Lattice<T, D>, const D: usize>(
    field: &ScattererField<T, L>,
    cfg: &LatticeEnsemble<T>,
    workers: usize,
) -> Result<EnsembleOutput<T>> {
    let template = EnsembleOutput::new(cfg.n_grid.as_ref(), cfg.t_grid.as_ref());
    chunked_reduce(
        cfg.n_trajectories,
        CHUNK,
        workers,
        || template.clone(),
        |out, i| {
            let mut rng = stream(cfg.master_seed, i);
            let mut local = field.clone();
            if cfg.field_per_trajectory {
                local.master_seed = hash_words(&[cfg.master_seed, FIELD_DOMAIN, i]);
            }
            let init = sample_initial(&local, cfg.speed, &mut rng);
            let mut rec = Recorder::new(&template);
            let mut obs = LatticeObserver {
                rec: &mut rec,
                lattice: &local.lattice,
                y0: init.position(&local.lattice),
                e0: init.v.normalized(),
            };
            let summary = run_trajectory(init, &local, &cfg.stop, cfg.max_internal_bounces, &mut obs);
            out.counters.collisions += summary.collisions;
            out.counters.reflections += summary.reflections;
            out.counters.trapped_escapes += summary.trapped_escapes;
            out.counters.internal_bounces += summary.internal_bounces;
            out.record(&rec, summary.flag.map(|f| f.name()));
        },
        |a, b| a.merge(b),
    )
}
