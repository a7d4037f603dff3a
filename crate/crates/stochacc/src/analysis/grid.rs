use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    ByCollision,
    ByTime,
}

/// Geometric checkpoints `start·r^k`, rounded to distinct integers for collision grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointGrid<T> {
    pub kind: GridKind,
    pub start: T,
    pub ratio: T,
    pub points: Vec<T>,
}

impl<T: Real> CheckpointGrid<T> {
    /// Grid with `per_decade` points per decade from `start` up to and including `end`.
    pub fn geometric(kind: GridKind, start: T, end: T, per_decade: usize) -> Result<Self> {
        if !(start > T::zero() && end >= start && per_decade > 0) {
            return Err(Error::InvalidParameter(format!(
                "checkpoint grid needs 0 < start <= end and per_decade > 0 (start={start}, end={end})"
            )));
        }
        let ratio = T::lit(10f64.powf(1.0 / per_decade as f64));
        let decades = (end / start).log10().as_f64();
        let count = (decades * per_decade as f64 + 1e-9).floor() as usize + 1;
        let mut points: Vec<T> = Vec::with_capacity(count);
        for k in 0..count {
            let x = start * T::lit(10f64.powf(k as f64 / per_decade as f64));
            let x = match kind {
                GridKind::ByCollision => x.round(),
                GridKind::ByTime => x,
            };
            if points.last().is_none_or(|&p| x > p) {
                points.push(x);
            }
        }
        Ok(Self { kind, start, ratio, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> T {
        *self.points.last().expect("grid is non-empty")
    }
}
