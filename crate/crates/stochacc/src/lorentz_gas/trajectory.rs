use serde::{Deserialize, Serialize};

use super::field::ScattererField;
use super::kernel::{next_disk_hit, traverse_disk, Chord, CollisionEvent, EventKind, ParticleState};
use super::lattice::Lattice;
use crate::error::Error;
use crate::scalar::{CompensatedTime, Real};
use crate::vector::Vector;

/// Stops once every limit that is set has been reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule<T> {
    pub max_collisions: Option<u64>,
    pub max_time: Option<T>,
}

impl<T: Real> StopRule<T> {
    pub fn collisions(n: u64) -> Self {
        Self { max_collisions: Some(n), max_time: None }
    }

    pub fn time(t: T) -> Self {
        Self { max_collisions: None, max_time: Some(t) }
    }

    fn done(&self, collisions: u64, tau: T) -> bool {
        let n_ok = self.max_collisions.is_none_or(|n| collisions >= n);
        let t_ok = self.max_time.is_none_or(|t| tau >= t);
        n_ok && t_ok && (self.max_collisions.is_some() || self.max_time.is_some())
    }
}

/// Reason a trajectory was abandoned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFlag {
    HorizonViolation,
    TrappedUnresolved,
    DegenerateVelocity,
}

impl TrajectoryFlag {
    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::HorizonViolation { .. } => Self::HorizonViolation,
            Error::DegenerateVelocity { .. } => Self::DegenerateVelocity,
            _ => Self::TrappedUnresolved,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HorizonViolation => "horizon_violation",
            Self::TrappedUnresolved => "trapped_unresolved",
            Self::DegenerateVelocity => "degenerate_velocity",
        }
    }
}

/// Receives events and time checkpoints from [`run_trajectory`].
pub trait Observer<T: Real, const D: usize> {
    fn on_event(&mut self, _event: &CollisionEvent<T, D>, _after: &ParticleState<T, D>) {}

    /// Next time at which the observer wants the state, if any.
    fn next_time_checkpoint(&self) -> Option<T> {
        None
    }

    fn on_time_checkpoint(&mut self, _tau: T, _y: Vector<T, D>, _v: Vector<T, D>, _collisions: u64) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl<T: Real, const D: usize> Observer<T, D> for NoObserver {}

#[derive(Clone, Debug)]
pub struct TrajectorySummary<T, const D: usize> {
    pub final_state: ParticleState<T, D>,
    pub collisions: u64,
    pub reflections: u64,
    pub trapped_escapes: u64,
    pub internal_bounces: u64,
    pub flag: Option<TrajectoryFlag>,
}

fn emit_time_checkpoints<T: Real, const D: usize, O: Observer<T, D>>(
    obs: &mut O,
    origin: Vector<T, D>,
    start: Vector<T, D>,
    velocity: Vector<T, D>,
    tau0: &CompensatedTime<T>,
    duration: T,
    collisions: u64,
) {
    let end = tau0.value() + duration;
    while let Some(tc) = obs.next_time_checkpoint() {
        if tc > end {
            break;
        }
        let dt = (tc - tau0.hi) - tau0.lo;
        let y = origin + start + velocity * dt.max(T::zero());
        obs.on_time_checkpoint(tc, y, velocity, collisions);
    }
}

/// Runs one particle from disk to disk until `stop` is met or the trajectory is flagged.
pub fn run_trajectory<T: Real, L: Lattice<T, D>, const D: usize, O: Observer<T, D>>(
    init: ParticleState<T, D>,
    field: &ScattererField<T, L>,
    stop: &StopRule<T>,
    max_internal_bounces: usize,
    obs: &mut O,
) -> TrajectorySummary<T, D> {
    let lat = &field.lattice;
    let mut state = init;
    let mut summary = TrajectorySummary {
        final_state: init,
        collisions: 0,
        reflections: 0,
        trapped_escapes: 0,
        internal_bounces: 0,
        flag: None,
    };
    while !stop.done(summary.collisions, state.tau.value()) {
        let hit = match next_disk_hit(&state, field) {
            Ok(h) => h,
            Err(e) => {
                summary.flag = Some(TrajectoryFlag::from_error(&e));
                break;
            }
        };
        let free_time = hit.distance / state.v.norm();
        emit_time_checkpoints(obs, lat.center(state.anchor), state.offset, state.v, &state.tau, free_time, summary.collisions);
        let center = lat.center(hit.site);
        let n = summary.collisions;
        let traversed = traverse_disk(&hit, &state.v, field, max_internal_bounces, |ch: &Chord<T, D>| {
            emit_time_checkpoints(obs, center, ch.start, ch.velocity, &ch.tau_start, ch.duration, n);
        });
        let (exit, mut event) = match traversed {
            Ok(r) => r,
            Err(e) => {
                summary.flag = Some(TrajectoryFlag::from_error(&e));
                break;
            }
        };
        summary.collisions += 1;
        event.n = summary.collisions;
        match event.kind {
            EventKind::ReflectOff => summary.reflections += 1,
            EventKind::TrappedThenEscaped { bounces } => {
                summary.trapped_escapes += 1;
                summary.internal_bounces += bounces as u64;
            }
            _ => {}
        }
        state = exit;
        obs.on_event(&event, &state);
    }
    summary.final_state = state;
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz_gas::field::{CouplingLaw, TimeProfile};
    use crate::lorentz_gas::kernel::sample_initial;
    use crate::lorentz_gas::lattice::{Chain, Hexagonal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Recorder {
        events: Vec<CollisionEvent<f64, 2>>,
    }

    impl Observer<f64, 2> for Recorder {
        fn on_event(&mut self, e: &CollisionEvent<f64, 2>, _: &ParticleState<f64, 2>) {
            self.events.push(*e);
        }
    }

    #[test]
    fn zero_coupling_is_free_flight() {
        let field = ScattererField::new(Hexagonal::<f64>::new(0.45).unwrap(), TimeProfile::F1, CouplingLaw::Fixed(0.0), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = sample_initial(&field, 1.7, &mut rng);
        let mut rec = Recorder { events: vec![] };
        let s = run_trajectory(init, &field, &StopRule::collisions(2000), 10_000, &mut rec);
        assert!(s.flag.is_none());
        assert_eq!(s.collisions, 2000);
        for e in &rec.events {
            assert!((e.v_out - init.v).norm() < 1e-12);
        }
        // Straight line: the final position lies on the initial ray.
        let y = s.final_state.position(&field.lattice) - init.offset;
        assert!(y.cross_norm(&init.v.normalized()) < 1e-9);
    }

    #[test]
    fn time_increases_across_events() {
        let field = ScattererField::new(Hexagonal::<f64>::new(0.45).unwrap(), TimeProfile::F1, CouplingLaw::UniformZeroHalf, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let init = sample_initial(&field, 1.0, &mut rng);
        let mut rec = Recorder { events: vec![] };
        run_trajectory(init, &field, &StopRule::collisions(5000), 10_000, &mut rec);
        for w in rec.events.windows(2) {
            assert!(w[1].tau_entry.value() > w[0].tau_exit.value());
            assert!(w[0].tau_exit.value() >= w[0].tau_entry.value());
        }
    }

    #[test]
    fn time_stop_rule_reaches_time() {
        let field = ScattererField::new(Chain::<f64>::new(0.25).unwrap(), TimeProfile::F1, CouplingLaw::UniformZeroHalf, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let init = sample_initial(&field, 1.0, &mut rng);
        let s = run_trajectory(init, &field, &StopRule::time(50.0), 10_000, &mut NoObserver);
        assert!(s.final_state.tau.value() >= 50.0);
    }
}
