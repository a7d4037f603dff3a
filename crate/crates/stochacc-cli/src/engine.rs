//! Executes a validated configuration and assembles its run record.

use std::time::Instant;

use stochacc::analysis::{
    detect_crossover, direction_decorrelation, fit_exponent, fit_power_law, predictions, CheckpointGrid, EnsembleSeries,
    ForceClass, GridKind, Observable,
};
use stochacc::coefficients::{changevar_check, gradient_coeffs, nongradient_coeffs, CoeffOptions};
use stochacc::ensemble::{run_lattice_ensemble, EnsembleOutput, LatticeEnsemble};
use stochacc::lorentz_gas::{Chain, Hexagonal, Lattice, ScattererField, StopRule};
use stochacc::random_walk::{
    bessel_reference, gradient_gamma, ks_distance, nongradient_gamma, reduced_terminal_samples, run_reduced_ensemble,
    run_walk_ensemble, KickKind, KickModel, ReducedEnsemble, SmoothBumpKick, SyntheticKick, WalkEnsemble,
};
use stochacc::single_scatterer::{averaged_energy_moments, MomentOptions, SmoothScatterer};
use stochacc::{Error, Result, Vector};

use crate::config::{EngineKind, ExperimentConfig, TestFunction, WalkMode};
use crate::record::{
    BesselRow, ChangeVarRow, CoeffsSummary, CrossoverRow, CrossoverSummary, DecorrelationSummary, FitRow, NamedSeries,
    OracleRow, RunRecord, SpeedRun,
};

const BESSEL_SALT: u64 = 0x4245_5353;

/// Runs the engine selected by `cfg` and returns the filled record.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let mut rec = RunRecord::new(cfg.clone());
    let y = cfg.model.y_star_for(cfg.dimension);
    match cfg.dimension {
        1 => run_dim::<1>(cfg, &mut rec, &|rec| lattice_engine(cfg, rec, Chain::new(y)?), &|| flat_disk(cfg, Chain::new(y)?)),
        2 => run_dim::<2>(cfg, &mut rec, &|rec| lattice_engine(cfg, rec, Hexagonal::new(y)?), &|| {
            flat_disk(cfg, Hexagonal::new(y)?)
        }),
        3 => run_dim::<3>(cfg, &mut rec, &|_| Err(no_lattice()), &|| Err(no_lattice())),
        d => Err(Error::InvalidParameter(format!("unsupported dimension {d}"))),
    }?;
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn no_lattice() -> Error {
    Error::InvalidParameter("no three-dimensional lattice is available".into())
}

fn flat_disk<const D: usize, L: Lattice<f64, D> + 'static>(cfg: &ExperimentConfig, lattice: L) -> Result<KickModel<f64, D>> {
    let field = ScattererField::new(lattice, cfg.model.profile.build(), cfg.model.coupling.build(), cfg.master_seed);
    Ok(KickModel::flat_disk_exact(field, cfg.model.max_internal_bounces))
}

/// The lattice-dependent pieces come in as closures since only dimensions 1 and 2 have a lattice.
fn run_dim<const D: usize>(
    cfg: &ExperimentConfig,
    rec: &mut RunRecord,
    lattice_run: &dyn Fn(&mut RunRecord) -> Result<()>,
    flat_disk: &dyn Fn() -> Result<KickModel<f64, D>>,
) -> Result<()> {
    match cfg.engine {
        EngineKind::Lattice => lattice_run(rec),
        EngineKind::Walk => walk_engine::<D>(cfg, rec, flat_disk),
        EngineKind::Oracle => oracle_engine::<D>(cfg, rec),
        EngineKind::Coeffs => {
            rec.coeffs = Some(coefficients::<D>(cfg)?);
            Ok(())
        }
        EngineKind::Changevar => changevar_engine::<D>(cfg, rec),
    }
}

fn grids(cfg: &ExperimentConfig) -> Result<(Option<CheckpointGrid<f64>>, Option<CheckpointGrid<f64>>)> {
    let g = &cfg.grid;
    let n_end = g.collision_end.or(cfg.ensemble.max_collisions.map(|n| n as f64));
    let t_end = g.time_end.or(cfg.ensemble.max_time);
    let n = n_end.map(|e| CheckpointGrid::geometric(GridKind::ByCollision, g.collision_start, e, g.per_decade)).transpose()?;
    let t = t_end.map(|e| CheckpointGrid::geometric(GridKind::ByTime, g.time_start, e, g.per_decade)).transpose()?;
    Ok((n, t))
}

fn fit_row(series: &EnsembleSeries<f64>, grid: GridKind, obs: Observable, cfg: &ExperimentConfig) -> FitRow {
    match fit_exponent(series, obs, cfg.analysis.window) {
        Ok(fit) => FitRow { grid, observable: obs, fit: Some(fit), error: None },
        Err(e) => FitRow { grid, observable: obs, fit: None, error: Some(e.to_string()) },
    }
}

/// Fits every predicted moment that the output tracks.
fn predicted_fits(out: &EnsembleOutput<f64>, class: ForceClass, dim: usize, cfg: &ExperimentConfig) -> Vec<FitRow> {
    predictions(class, dim)
        .iter()
        .filter_map(|p| {
            let series = match p.grid {
                GridKind::ByCollision => out.by_n.as_ref(),
                GridKind::ByTime => out.by_tau.as_ref(),
            }?;
            series.column(p.observable)?;
            Some(fit_row(series, p.grid, p.observable, cfg))
        })
        .collect()
}

fn speed_run(v0: f64, out: EnsembleOutput<f64>, class: ForceClass, dim: usize, cfg: &ExperimentConfig) -> SpeedRun {
    let fits = predicted_fits(&out, class, dim, cfg);
    let mut series = Vec::new();
    if let Some(s) = out.by_n {
        series.push(NamedSeries { label: "n".into(), series: s });
    }
    if let Some(s) = out.by_tau {
        series.push(NamedSeries { label: "tau".into(), series: s });
    }
    SpeedRun { v0, counters: out.counters, series, fits }
}

fn lattice_engine<const D: usize, L: Lattice<f64, D>>(cfg: &ExperimentConfig, rec: &mut RunRecord, lattice: L) -> Result<()> {
    let field = ScattererField::new(lattice, cfg.model.profile.build(), cfg.model.coupling.build(), cfg.master_seed);
    let (n_grid, t_grid) = grids(cfg)?;
    let e = &cfg.ensemble;
    for &v0 in &e.v0 {
        let ens = LatticeEnsemble {
            n_trajectories: e.n_trajectories,
            speed: v0,
            stop: StopRule { max_collisions: e.max_collisions, max_time: e.max_time },
            n_grid: n_grid.clone(),
            t_grid: t_grid.clone(),
            max_internal_bounces: cfg.model.max_internal_bounces,
            master_seed: cfg.master_seed,
            field_per_trajectory: e.field_per_trajectory,
        };
        let out = run_lattice_ensemble(&field, &ens, cfg.workers)?;
        rec.runs.push(speed_run(v0, out, ForceClass::Gradient, D, cfg));
    }
    scale_analyses(cfg, rec)
}

/// Crossover and decorrelation scales across the initial speeds.
fn scale_analyses(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    if let Some(c) = cfg.analysis.crossover {
        let mut rows = Vec::new();
        for run in &rec.runs {
            let Some(series) = run.series("n") else { continue };
            rows.push(match detect_crossover(series, c.observable, c.exponent, c.tol, None) {
                Ok(x) => CrossoverRow { v0: run.v0, n_star: Some(x.n_star), tau_star: x.tau_star, error: None },
                Err(e) => CrossoverRow { v0: run.v0, n_star: None, tau_star: None, error: Some(e.to_string()) },
            });
        }
        let loglog = |pick: fn(&CrossoverRow) -> Option<f64>| {
            let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| pick(r).map(|y| (r.v0, y))).collect();
            if pts.len() < 2 {
                return None;
            }
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            fit_power_law(&xs, &ys, &vec![0.0; xs.len()]).ok()
        };
        let n_star_fit = loglog(|r| r.n_star);
        let tau_star_fit = loglog(|r| r.tau_star);
        rec.crossover = Some(CrossoverSummary { observable: c.observable, exponent: c.exponent, tol: c.tol, rows, n_star_fit, tau_star_fit });
    }
    if cfg.analysis.decorrelation {
        let runs: Vec<(f64, &EnsembleSeries<f64>)> = rec.runs.iter().filter_map(|r| r.series("n").map(|s| (r.v0, s))).collect();
        let (rows, m_star_fit) = direction_decorrelation(&runs)?;
        rec.decorrelation = Some(DecorrelationSummary { rows, m_star_fit });
    }
    Ok(())
}

fn synthetic<const D: usize>(cfg: &ExperimentConfig) -> SyntheticKick<f64> {
    let m = &cfg.model;
    SyntheticKick { class: m.force, dim: D, scale: m.scale, deflection: m.deflection, noise: m.noise, gamma: m.gamma }
}

fn scatterer<const D: usize>(cfg: &ExperimentConfig) -> Result<SmoothScatterer<f64, D>> {
    let m = &cfg.model;
    match m.force {
        ForceClass::Gradient => SmoothScatterer::bump(m.amplitude, m.profile.build()),
        ForceClass::NonGradient => SmoothScatterer::swirl(m.amplitude, m.profile.build()),
    }
}

fn coeff_options(cfg: &ExperimentConfig) -> CoeffOptions {
    let c = &cfg.coeffs;
    CoeffOptions {
        kernel_samples: c.kernel_samples,
        line_samples: c.line_samples,
        phase_points: c.phase_points,
        seed: cfg.master_seed,
        workers: cfg.workers,
    }
}

fn coefficients<const D: usize>(cfg: &ExperimentConfig) -> Result<CoeffsSummary> {
    let s = scatterer::<D>(cfg)?;
    let c2 = cfg.model.coupling.build().second_moment();
    let opts = coeff_options(cfg);
    Ok(match cfg.model.force {
        ForceClass::Gradient => CoeffsSummary::Gradient(gradient_coeffs(&s, c2, &opts)?),
        ForceClass::NonGradient => CoeffsSummary::NonGradient(nongradient_coeffs(&s, c2, &opts)?),
    })
}

fn walk_engine<const D: usize>(
    cfg: &ExperimentConfig,
    rec: &mut RunRecord,
    flat_disk: &dyn Fn() -> Result<KickModel<f64, D>>,
) -> Result<()> {
    match cfg.walk.mode {
        WalkMode::Full => full_walks::<D>(cfg, rec, flat_disk),
        WalkMode::Reduced => reduced_walks::<D>(cfg, rec),
        WalkMode::Bessel => bessel_comparison::<D>(cfg, rec),
    }
}

fn full_walks<const D: usize>(
    cfg: &ExperimentConfig,
    rec: &mut RunRecord,
    flat_disk: &dyn Fn() -> Result<KickModel<f64, D>>,
) -> Result<()> {
    let m = &cfg.model;
    let kick = match m.kick {
        KickKind::SyntheticBeta1 => KickModel::synthetic(synthetic::<D>(cfg)),
        KickKind::FlatDiskExact => flat_disk()?,
        KickKind::SmoothExpansion => {
            let summary = coefficients::<D>(cfg)?;
            let drift = summary.diffusion_drift().2;
            rec.coeffs = Some(summary);
            KickModel::smooth_expansion(SmoothBumpKick::new(m.amplitude, m.profile.build(), m.coupling.build(), drift)?)
        }
    };
    let (n_grid, t_grid) = grids(cfg)?;
    let e = &cfg.ensemble;
    for &v0 in &e.v0 {
        let ens = WalkEnsemble {
            n_walks: e.n_trajectories,
            speed: v0,
            eta_star: m.eta_star,
            max_steps: e.max_collisions,
            max_time: e.max_time,
            n_grid: n_grid.clone(),
            t_grid: t_grid.clone(),
            master_seed: cfg.master_seed,
            boundary_limit: e.boundary_limit,
        };
        let out = run_walk_ensemble(&kick, &ens, cfg.workers)?;
        rec.runs.push(speed_run(v0, out, m.force, D, cfg));
    }
    scale_analyses(cfg, rec)
}

fn class_gamma<const D: usize>(cfg: &ExperimentConfig) -> f64 {
    cfg.model.gamma.unwrap_or_else(|| match cfg.model.force {
        ForceClass::Gradient => gradient_gamma(D),
        ForceClass::NonGradient => nongradient_gamma(D),
    })
}

fn reduced_walks<const D: usize>(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let kick = synthetic::<D>(cfg);
    let (n_grid, _) = grids(cfg)?;
    let grid = n_grid.ok_or_else(|| Error::InvalidParameter("reduced walks need a collision grid".into()))?;
    // ‖v‖² as a power of ξ.
    let speed2_map = match cfg.model.force {
        ForceClass::Gradient => ((3.0 * kick.scale).powf(2.0 / 3.0), 2.0 / 3.0),
        ForceClass::NonGradient => (2.0 * kick.scale, 1.0),
    };
    for &v0 in &cfg.ensemble.v0 {
        let ens = ReducedEnsemble {
            n_walks: cfg.ensemble.n_trajectories,
            xi0: cfg.walk.xi0.unwrap_or_else(|| kick.xi_of_speed(v0)),
            gamma: class_gamma::<D>(cfg),
            noise: cfg.model.noise,
            grid: grid.clone(),
            master_seed: cfg.master_seed,
            boundary_limit: cfg.ensemble.boundary_limit,
            speed2_map,
        };
        let series = run_reduced_ensemble(&ens, cfg.workers)?;
        let fits = [Observable::V2, Observable::Xi2]
            .iter()
            .map(|&o| fit_row(&series, GridKind::ByCollision, o, cfg))
            .collect();
        rec.runs.push(SpeedRun {
            v0,
            counters: Default::default(),
            series: vec![NamedSeries { label: "reduced".into(), series }],
            fits,
        });
    }
    Ok(())
}

fn bessel_comparison<const D: usize>(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let w = &cfg.walk;
    let xi0 = w.xi0.unwrap_or(1.0);
    for &gamma in &w.bessel_gammas {
        let delta = cfg.model.delta.unwrap_or(2.0 * gamma + 1.0);
        let walk = reduced_terminal_samples(gamma, xi0, w.bessel_steps, cfg.model.noise, w.bessel_samples, cfg.master_seed, cfg.workers)?;
        let y0 = xi0 * xi0 / w.bessel_steps as f64;
        let reference =
            bessel_reference(delta, y0, 1.0, w.em_steps, w.bessel_samples, cfg.master_seed ^ BESSEL_SALT, cfg.workers)?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        rec.bessel.push(BesselRow {
            gamma,
            delta,
            xi0,
            steps: w.bessel_steps,
            samples: w.bessel_samples,
            ks: ks_distance(&walk, &reference),
            walk_mean: mean(&walk),
            reference_mean: mean(&reference),
        });
    }
    Ok(())
}

fn oracle_engine<const D: usize>(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    let s = scatterer::<D>(cfg)?;
    let coupling = cfg.model.coupling.build();
    let o = &cfg.oracle;
    for &speed in &o.speeds {
        let opts = MomentOptions {
            n_samples: o.n_samples,
            phase_strata: o.phase_strata,
            antithetic_phase: true,
            time_reversal: true,
            antithetic_coupling: o.antithetic_coupling,
            step: o.step,
            tol: o.tol,
            seed: cfg.master_seed,
            workers: cfg.workers,
        };
        let m = averaged_energy_moments(speed, &s, &coupling, &opts)?;
        let (kd, k2) = match cfg.model.force {
            ForceClass::Gradient => (speed.powi(4), speed * speed),
            ForceClass::NonGradient => (speed * speed, 1.0),
        };
        rec.oracle.push(OracleRow {
            moments: m,
            drift: m.mean * kd,
            drift_stderr: m.stderr_mean * kd,
            diffusion: m.mean_sq * k2,
            diffusion_stderr: m.stderr_sq * k2,
        });
    }
    rec.coeffs = Some(coefficients::<D>(cfg)?);
    Ok(())
}

/// `f(y, y′, r)` for the change-of-variables check; every choice is positive on the support.
pub fn test_function<const D: usize>(f: TestFunction) -> impl Fn(&Vector<f64, D>, &Vector<f64, D>, f64) -> f64 + Sync {
    move |y, y2, r| match f {
        TestFunction::Constant => 1.0,
        TestFunction::Gaussian => (-4.0 * (y.norm2() + y2.norm2())).exp(),
        TestFunction::Separation => r * (1.0 + r),
        TestFunction::Anisotropic => 1.0 + (y.0[0] - y2.0[0]).powi(2) + y.0[D - 1] * y2.0[D - 1],
    }
}

fn changevar_engine<const D: usize>(cfg: &ExperimentConfig, rec: &mut RunRecord) -> Result<()> {
    for (k, &f) in cfg.changevar.functions.iter().enumerate() {
        let seed = cfg.master_seed.wrapping_add(k as u64);
        let result = changevar_check::<f64, D>(test_function::<D>(f), cfg.changevar.n_samples, seed, cfg.workers)?;
        rec.changevar.push(ChangeVarRow { function: f, result });
    }
    Ok(())
}
