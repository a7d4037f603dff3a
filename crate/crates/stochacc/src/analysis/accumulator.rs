use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::CheckpointGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-pass mean and variance with Chan's pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford<T> {
    pub count: u64,
    pub mean: T,
    pub m2: T,
}

impl<T: Real> Welford<T> {
    pub fn new() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / T::lit(self.count as f64);
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = T::lit(self.count as f64);
        let nb = T::lit(other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.m2 / T::lit((self.count - 1) as f64)).max(T::zero())
        }
    }

    pub fn stderr(&self) -> T {
        if self.count == 0 {
            T::zero()
        } else {
            (self.variance() / T::lit(self.count as f64)).sqrt()
        }
    }
}

/// Quantities that can be tracked at checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `‖v‖`
    V,
    /// `‖v‖²`
    V2,
    /// `‖v‖⁻¹`
    InvV,
    /// `‖v‖⁻²`
    InvV2,
    /// `‖y‖`
    Y,
    /// `‖y‖²`
    Y2,
    /// Elapsed time (on collision grids).
    Tau,
    /// Collision count (on time grids).
    N,
    /// `e·e₀`, direction overlap with the initial direction.
    Align,
    /// Reduced speed variable.
    Xi,
    /// Its square.
    Xi2,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Self::V => "v",
            Self::V2 => "v2",
            Self::InvV => "inv_v",
            Self::InvV2 => "inv_v2",
            Self::Y => "y",
            Self::Y2 => "y2",
            Self::Tau => "tau",
            Self::N => "n",
            Self::Align => "align",
            Self::Xi => "xi",
            Self::Xi2 => "xi2",
        }
    }

    /// Observables derived from a particle state.
    pub const KINEMATIC: [Observable; 8] =
        [Self::V, Self::V2, Self::InvV, Self::InvV2, Self::Y, Self::Y2, Self::Tau, Self::Align];
}

/// Kinematic observables for one state, in the order of [`Observable::KINEMATIC`];
/// `clock` is the time on collision grids and the collision count on time grids.
pub fn kinematic_values<T: Real>(speed2: T, dist2: T, clock: T, align: T) -> [T; 8] {
    let speed = speed2.sqrt();
    [speed, speed2, speed.recip(), speed2.recip(), dist2.sqrt(), dist2, clock, align]
}

/// Values recorded by one trajectory at the checkpoints it reached.
#[derive(Clone, Debug)]
pub struct TrajectoryBuffer<T> {
    width: usize,
    capacity: usize,
    values: Vec<T>,
}

impl<T: Real> TrajectoryBuffer<T> {
    pub fn new(checkpoints: usize, width: usize) -> Self {
        Self { width, capacity: checkpoints, values: Vec::with_capacity(checkpoints * width) }
    }

    /// Index of the next checkpoint to be filled.
    pub fn filled(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_full(&self) -> bool {
        self.filled() >= self.capacity
    }

    pub fn push(&mut self, row: &[T]) {
        debug_assert_eq!(row.len(), self.width);
        if !self.is_full() {
            self.values.extend_from_slice(row);
        }
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }
}

/// Checkpointed moment estimates over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries<T> {
    pub grid: CheckpointGrid<T>,
    pub observables: Vec<Observable>,
    /// `stats[checkpoint][observable]`.
    pub stats: Vec<Vec<Welford<T>>>,
    pub launched: u64,
    pub included: u64,
    pub excluded: BTreeMap<String, u64>,
}

impl<T: Real> EnsembleSeries<T> {
    pub fn new(grid: CheckpointGrid<T>, observables: Vec<Observable>) -> Self {
        let stats = vec![vec![Welford::new(); observables.len()]; grid.len()];
        Self { grid, observables, stats, launched: 0, included: 0, excluded: BTreeMap::new() }
    }

    pub fn buffer(&self) -> TrajectoryBuffer<T> {
        TrajectoryBuffer::new(self.grid.len(), self.observables.len())
    }

    /// Adds a completed trajectory.
    pub fn commit(&mut self, buf: &TrajectoryBuffer<T>) {
        self.launched += 1;
        self.included += 1;
        for (k, row) in buf.values.chunks(self.observables.len()).enumerate() {
            for (acc, &x) in self.stats[k].iter_mut().zip(row) {
                acc.push(x);
            }
        }
    }

    /// Counts a trajectory dropped for reason `flag`.
    pub fn exclude(&mut self, flag: &str) {
        self.launched += 1;
        *self.excluded.entry(flag.to_string()).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.observables != other.observables {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.stats.iter_mut().zip(&other.stats) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        self.launched += other.launched;
        self.included += other.included;
        for (k, v) in &other.excluded {
            *self.excluded.entry(k.clone()).or_insert(0) += v;
        }
        Ok(())
    }

    pub fn column(&self, obs: Observable) -> Option<usize> {
        self.observables.iter().position(|&o| o == obs)
    }

    /// `(checkpoint, samples, mean, stderr)` rows for one observable.
    pub fn rows(&self, obs: Observable) -> Vec<(T, u64, T, T)> {
        let Some(c) = self.column(obs) else { return vec![] };
        self.grid
            .points
            .iter()
            .zip(&self.stats)
            .map(|(&x, s)| (x, s[c].count, s[c].mean, s[c].stderr()))
            .collect()
    }

    /// Rows reached by every included trajectory.
    pub fn complete_rows(&self, obs: Observable) -> Vec<(T, u64, T, T)> {
        let full = self.included;
        self.rows(obs).into_iter().filter(|r| r.1 == full && full > 0).collect()
    }
}
