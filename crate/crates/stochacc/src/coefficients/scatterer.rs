use serde::{Deserialize, Serialize};

use super::geometry::{impact_volume, pair_weight, phase_points, sample_pair};
use crate::analysis::Welford;
use crate::ensemble::{chunked_reduce, SAMPLE_CHUNK};
use crate::error::{Error, Result};
use crate::lorentz_gas::{CouplingLaw, Phase};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Real;
use crate::seeding::stream;
use crate::single_scatterer::{beta0_line_integral, beta1_line_integral, ScatterParams, SmoothScatterer};
use crate::vector::Vector;

use rand::Rng;

/// Sample budgets for the coefficient quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffOptions {
    /// Pair samples for the double-space kernel integral.
    pub kernel_samples: u64,
    /// Impact/orientation samples for the line-integral route.
    pub line_samples: u64,
    /// Phase points per torus dimension averaged within each sample.
    pub phase_points: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        Self { kernel_samples: 1_000_000, line_samples: 20_000, phase_points: 4, seed: 0, workers: 1 }
    }
}

/// Monte Carlo or quadrature estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub stderr: T,
}

impl<T: Real> Estimate<T> {
    fn exact(value: T) -> Self {
        Self { value, stderr: T::zero() }
    }

    fn scaled(self, k: T) -> Self {
        Self { value: self.value * k, stderr: self.stderr * k.abs() }
    }
}

/// Diffusion and drift of the energy for a gradient scatterer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCoeffs<T> {
    pub dim: usize,
    /// Double-space kernel route.
    pub d2: Estimate<T>,
    /// `(d−3)D²/2`
    pub b: Estimate<T>,
    pub gamma: T,
    /// Independent estimate from squared line integrals.
    pub d2_line: Estimate<T>,
}

/// Diffusion and drift of the energy for a non-gradient scatterer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonGradientCoeffs<T> {
    pub dim: usize,
    pub d2p: Estimate<T>,
    /// `(d−1)D′²/2`
    pub bp: Estimate<T>,
    pub gamma_p: T,
    pub d2p_line: Estimate<T>,
}

fn mc<T: Real>(n: u64, opts: &CoeffOptions, salt: u64, f: impl Fn(&mut crate::seeding::StreamRng) -> T + Sync) -> Result<Estimate<T>> {
    let w = chunked_reduce(
        n,
        SAMPLE_CHUNK,
        opts.workers,
        Welford::new,
        |acc, i| {
            let mut rng = stream(opts.seed ^ salt, i);
            acc.push(f(&mut rng));
        },
        |a, b| a.merge(&b),
    )?;
    Ok(Estimate { value: w.mean, stderr: w.stderr() })
}

fn random_phase<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Phase<T> {
    [T::lit(rng.random()), T::lit(rng.random())]
}

/// `∫∫‖y−y′‖^{1−d} h(y, y′, dir)` over the support, normalized as the κ-average of a squared line integral.
fn kernel_route<T: Real, const D: usize>(
    c2: T,
    opts: &CoeffOptions,
    salt: u64,
    h: impl Fn(&Vector<T, D>, &Vector<T, D>, &Vector<T, D>, &Phase<T>) -> T + Sync,
    torus_dim: usize,
) -> Result<Estimate<T>> {
    // (c̄²/C_d)·(2/|S^{d−1}|)·∫∫, the factor 2 from the two orientations of each chord.
    let norm = T::lit(2.0 * pair_weight(D) / (impact_volume(D) * super::geometry::sphere_area(D)));
    let est = mc(opts.kernel_samples, opts, salt, |rng| {
        let p = sample_pair::<T, D, _>(rng);
        let offset = random_phase(rng);
        if !p.inside {
            return T::zero();
        }
        let pts = phase_points(torus_dim, offset, opts.phase_points);
        let sum: T = pts.iter().map(|phi| h(&p.y, &p.y2, &p.dir, phi)).sum();
        sum / T::from_usize_lossy(pts.len())
    })?;
    Ok(est.scaled(norm * c2))
}

/// κ-average of a squared line integral `q(e, κ)` computed with unit coupling.
fn line_route<T: Real, const D: usize>(
    c2: T,
    opts: &CoeffOptions,
    salt: u64,
    torus_dim: usize,
    q: impl Fn(&Vector<T, D>, &ScatterParams<T, D>) -> Result<T> + Sync,
) -> Result<Estimate<T>> {
    let e = Vector::<T, D>::axis(0);
    let failure = std::sync::Mutex::new(None);
    let est = mc(opts.line_samples, opts, salt, |rng| {
        let p = ScatterParams::sample(&e, &CouplingLaw::Fixed(T::one()), rng);
        let pts = phase_points(torus_dim, p.phase, opts.phase_points);
        let mut sum = T::zero();
        for phi in &pts {
            match q(&e, &ScatterParams { phase: *phi, ..p }) {
                Ok(v) => sum += v * v,
                Err(err) => {
                    failure.lock().expect("poisoned").get_or_insert(err);
                }
            }
        }
        sum / T::from_usize_lossy(pts.len())
    })?;
    if let Some(err) = failure.into_inner().expect("poisoned") {
        return Err(err);
    }
    Ok(est.scaled(c2))
}

/// One-dimensional case: `c̄²⟨(∫ q(y, φ) dy)²⟩_φ` by quadrature on a phase grid.
fn tensor_1d<T: Real>(c2: T, torus_dim: usize, q: impl Fn(T, &Phase<T>) -> T) -> Result<T> {
    let k = if torus_dim == 1 { 64 } else { 32 };
    let pts = phase_points(torus_dim, [T::zero(); 2], k);
    let opts = QuadratureOptions { abs_tol: 1e-12, rel_tol: 0.0, max_intervals: 4000 };
    let mut acc = T::zero();
    for phi in &pts {
        let (v, _) = integrate(|y| q(y, phi), T::lit(-0.5), T::lit(0.5), opts)?;
        acc += v * v;
    }
    Ok(c2 * acc / T::from_usize_lossy(pts.len()))
}

fn check_nonneg<T: Real>(est: &Estimate<T>) -> Result<()> {
    // A negative mean beyond four standard errors cannot come from a correlation kernel.
    if est.value < -T::lit(4.0) * est.stderr - T::lit(1e-14) {
        return Err(Error::NegativeD2 { value: est.value.as_f64() });
    }
    Ok(())
}

/// `D²`, `B` and `γ` for a gradient scatterer with coupling second moment `c2`.
pub fn gradient_coeffs<T: Real, const D: usize>(
    s: &SmoothScatterer<T, D>,
    c2: T,
    opts: &CoeffOptions,
) -> Result<GradientCoeffs<T>> {
    if !s.is_gradient() {
        return Err(Error::InvalidParameter("gradient coefficients need a gradient field".into()));
    }
    let f = s.field();
    let m = s.profile().torus_dim();
    let (d2, d2_line) = if D == 1 {
        let v = tensor_1d(c2, m, |y, phi| f.potential_dtau(&Vector::from_fn(|_| y), phi))?;
        let line = line_route::<T, D>(c2, opts, 0x6c31, m, |e, p| beta1_line_integral(e, p, s))?;
        (Estimate::exact(v), line)
    } else {
        let k = kernel_route::<T, D>(c2, opts, 0x6b31, |y, y2, _, phi| f.potential_dtau(y, phi) * f.potential_dtau(y2, phi), m)?;
        let line = line_route::<T, D>(c2, opts, 0x6c31, m, |e, p| beta1_line_integral(e, p, s))?;
        (k, line)
    };
    check_nonneg(&d2)?;
    let dm3 = T::lit(D as f64 - 3.0);
    Ok(GradientCoeffs {
        dim: D,
        d2,
        b: d2.scaled(dm3 * T::lit(0.5)),
        gamma: T::lit((D as f64 - 2.0) / 6.0),
        d2_line,
    })
}

/// `D′²`, `B′` and `γ′` for a non-gradient scatterer with centered coupling of second moment `c2`.
pub fn nongradient_coeffs<T: Real, const D: usize>(
    s: &SmoothScatterer<T, D>,
    c2: T,
    opts: &CoeffOptions,
) -> Result<NonGradientCoeffs<T>> {
    let f = s.field();
    let m = s.profile().torus_dim();
    let line = line_route::<T, D>(c2, opts, 0x6c30, m, |e, p| beta0_line_integral(e, p, s))?;
    let d2p = if D == 1 {
        Estimate::exact(tensor_1d(c2, m, |y, phi| f.force(&Vector::from_fn(|_| y), phi)[0])?)
    } else {
        kernel_route::<T, D>(c2, opts, 0x6b30, |y, y2, dir, phi| dir.dot(&f.force(y, phi)) * dir.dot(&f.force(y2, phi)), m)?
    };
    check_nonneg(&d2p)?;
    Ok(NonGradientCoeffs {
        dim: D,
        d2p,
        bp: d2p.scaled(T::lit((D as f64 - 1.0) * 0.5)),
        gamma_p: T::lit((D as f64 - 1.0) / 4.0),
        d2p_line: line,
    })
}
