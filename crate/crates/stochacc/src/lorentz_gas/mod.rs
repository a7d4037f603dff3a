//! Event-driven motion through a lattice of flat, time-modulated circular scatterers.
//!
//! Inside a disk the potential is spatially constant, so the particle moves on
//! straight chords; all energy exchange happens at the boundary, where the
//! normal velocity component is refracted or reflected by the potential step
//! present at that instant.

mod field;
mod kernel;
mod lattice;
mod trajectory;

pub use field::{CouplingLaw, Phase, ProfileKind, ScattererField, SiteState, TimeProfile};
pub use kernel::{
    boundary_cross, next_disk_hit, sample_initial, traverse_disk, Chord, CollisionEvent, Crossing, DiskHit,
    EventKind, ParticleState, MIN_SPEED,
};
pub use lattice::{Chain, Hexagonal, Lattice, LatticeKind, Site};
pub use trajectory::{run_trajectory, NoObserver, Observer, StopRule, TrajectoryFlag, TrajectorySummary};

