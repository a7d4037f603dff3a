use rand::SeedableRng;
use stochacc::analysis::{
    direction_decorrelation, fit_exponent, CheckpointGrid, Decorrelation, ForceClass, GridKind, Observable, Welford,
    WindowPolicy,
};
use stochacc::ensemble::{run_lattice_ensemble, LatticeEnsemble};
use stochacc::lorentz_gas::{CouplingLaw, Hexagonal, ScattererField, StopRule, TimeProfile};
use stochacc::random_walk::{
    bessel_reference, direction_walk_stats, full_walk_step, gradient_gamma, ks_distance, reduced_terminal_samples,
    reduced_xi_step, run_reduced_ensemble, KickModel, NoiseLaw, ReducedEnsemble, ReducedState, SyntheticKick,
    WalkEnsemble, WalkState,
};
use stochacc::scalar::CompensatedTime;
use stochacc::seeding::{stream, StreamRng};
use stochacc::Vector;

/// `⟨ξ_n²⟩ − ξ₀²` against `(2γ+1)n`, started high enough that the floor is never met.
fn xi2_gap(gamma: f64, n: u64, walks: u64) -> (f64, f64) {
    let xi0 = 20.0 * (n as f64).sqrt() + 20.0;
    let mut acc = Welford::new();
    for i in 0..walks {
        let mut rng = stream(40 + n, i);
        let mut s = ReducedState::new(xi0, gamma);
        for _ in 0..n {
            s = reduced_xi_step(s, NoiseLaw::Normal.sample(&mut rng));
        }
        assert_eq!(s.boundary_hits, 0);
        acc.push((s.xi - xi0) * (s.xi + xi0));
    }
    (acc.mean - (2.0 * gamma + 1.0) * n as f64, acc.stderr())
}

#[test]
fn squared_reduced_variable_grows_linearly_on_average() {
    for gamma in [-1.0 / 6.0, 0.0, 1.0 / 6.0] {
        for (n, walks) in [(100, 20_000), (10_000, 2_000), (1_000_000, 200)] {
            let (gap, se) = xi2_gap(gamma, n, walks);
            assert!(gap.abs() <= 3.0 * se, "gamma {gamma} n {n}: gap {gap} se {se}");
        }
    }
}

#[test]
fn rescaled_reduced_walk_approaches_the_squared_bessel_law() {
    let walk = reduced_terminal_samples(0.0, 1.0, 10_000, NoiseLaw::Normal, 4_000, 8, 1).unwrap();
    let reference = bessel_reference(1.0, 1e-4, 1.0, 2_000, 4_000, 9, 1).unwrap();
    let ks = ks_distance(&walk, &reference);
    assert!(ks < 0.05, "KS {ks}");
}

#[test]
fn elapsed_time_is_rebuilt_exactly_from_the_speeds() {
    let kick = KickModel::<f64, 2>::synthetic(SyntheticKick {
        class: ForceClass::Gradient,
        dim: 2,
        scale: 1.0,
        deflection: 1.0,
        noise: NoiseLaw::Normal,
        gamma: None,
    });
    let eta = 0.7;
    let mut rng = StreamRng::seed_from_u64(12);
    let mut s = WalkState::new(Vector([1.5, 0.5]));
    let mut rebuilt = CompensatedTime::new(0.0);
    let mut y = Vector::<f64, 2>::zero();
    for _ in 0..5_000 {
        s = full_walk_step(&s, &kick, eta, &mut rng).unwrap().0;
        rebuilt.advance(eta / s.v.norm());
        y += s.v * (1.0 / s.v.norm()) * eta;
        assert_eq!(rebuilt, s.tau);
        assert_eq!(y, s.y);
    }
}

#[test]
fn gradient_reduced_variable_spreads_diffusively_in_every_dimension() {
    let grid = CheckpointGrid::geometric(GridKind::ByCollision, 1.0, 20_000.0, 8).unwrap();
    for d in 1..=3 {
        let cfg = ReducedEnsemble {
            n_walks: 2_000,
            xi0: 1.0,
            gamma: gradient_gamma(d),
            noise: NoiseLaw::Normal,
            grid: grid.clone(),
            master_seed: 30 + d as u64,
            boundary_limit: 1.0,
            speed2_map: (3f64.powf(2.0 / 3.0), 2.0 / 3.0),
        };
        let s = run_reduced_ensemble(&cfg, 1).unwrap();
        let fit = fit_exponent(&s, Observable::Xi, WindowPolicy::LastDecade).unwrap();
        assert!((fit.exponent - 0.5).abs() <= 0.03, "d={d}: {fit:?}");
    }
}

/// `M*` of the lattice and of the independent-kick surrogate built on the same disks.
fn m_star_pair(speed: f64) -> (f64, f64) {
    let field = ScattererField::new(Hexagonal::new(0.45).unwrap(), TimeProfile::F1, CouplingLaw::UniformZeroHalf, 3);
    let lags = CheckpointGrid::geometric(GridKind::ByCollision, 1.0, 10.0, 20).unwrap();
    let lattice = run_lattice_ensemble(
        &field,
        &LatticeEnsemble {
            n_trajectories: 20_000,
            speed,
            stop: StopRule { max_collisions: Some(10), max_time: None },
            n_grid: Some(lags.clone()),
            t_grid: None,
            max_internal_bounces: 10_000,
            master_seed: 5,
            field_per_trajectory: true,
        },
        1,
    )
    .unwrap();
    let walk_cfg = WalkEnsemble {
        n_walks: 20_000,
        speed,
        eta_star: 1.0,
        max_steps: Some(10),
        max_time: None,
        n_grid: None,
        t_grid: None,
        master_seed: 6,
        boundary_limit: 1.0,
    };
    let kick = KickModel::flat_disk_exact(field.clone(), 10_000);
    let walk = direction_walk_stats(&kick, &walk_cfg, 0, &lags, 1).unwrap();
    let by_n = lattice.by_n.unwrap();
    let (rows, _) = direction_decorrelation(&[(speed, &by_n), (speed, &walk.series)]).unwrap();
    let m = |d: &Decorrelation<f64>| match d {
        Decorrelation::Decay { m_star, .. } => *m_star,
        Decorrelation::NoDecay => f64::INFINITY,
    };
    (m(&rows[0].1), m(&rows[1].1))
}

#[test]
fn surrogate_decorrelation_scale_tracks_the_lattice() {
    for speed in [2.0, 3.0] {
        let (lattice, surrogate) = m_star_pair(speed);
        let ratio = surrogate / lattice;
        assert!((0.5..=2.0).contains(&ratio), "v0 {speed}: lattice {lattice} surrogate {surrogate}");
    }
}
