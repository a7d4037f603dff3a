use super::integrate::ScatterParams;
use super::potential::{SmoothScatterer, SUPPORT_RADIUS};
use crate::error::{Error, Result};
use crate::lorentz_gas::Phase;
use crate::quadrature::{integrate, integrate_vec, QuadratureOptions};
use crate::scalar::Real;
use crate::vector::Vector;

/// Leading coefficients of `Δv = α⁽¹⁾/‖v‖ + α⁽²⁾/‖v‖² + …` and of `ΔE = β⁽⁰⁾ + β⁽¹⁾/‖v‖ + …`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionCoeffs<T, const D: usize> {
    pub alpha1: Vector<T, D>,
    pub alpha2: Vector<T, D>,
    /// `e·α⁽¹⁾`
    pub beta0: T,
    /// `e·α⁽²⁾`
    pub beta1: T,
}

fn opts() -> QuadratureOptions {
    QuadratureOptions { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: 4000 }
}

/// Parameter range `[λ_a, λ_b]` in which `y0 + λe` lies inside the support.
fn chord<T: Real, const D: usize>(b: &Vector<T, D>) -> Option<(T, T)> {
    let r = T::lit(SUPPORT_RADIUS);
    let rest = r * r - b.norm2();
    if rest <= T::zero() {
        return None;
    }
    let w = rest.sqrt();
    Some((r - w, r + w))
}

/// Force seen in the lab frame: `M g(M⁻¹y, φ)` and its `∂_τ` derivative.
struct Frame<'a, T, const D: usize> {
    s: &'a SmoothScatterer<T, D>,
    p: &'a ScatterParams<T, D>,
}

impl<T: Real, const D: usize> Frame<'_, T, D> {
    fn force(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        let m = &self.p.rotation;
        m.apply(&self.s.field().force(&m.apply_inverse(y), phi))
    }

    fn force_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> Vector<T, D> {
        let m = &self.p.rotation;
        m.apply(&self.s.field().force_dtau(&m.apply_inverse(y), phi))
    }

    fn potential_dtau(&self, y: &Vector<T, D>, phi: &Phase<T>) -> T {
        self.s.field().potential_dtau(&self.p.rotation.apply_inverse(y), phi)
    }
}

/// First two momentum-transfer coefficients by line quadrature along `b + (λ−½)e`.
pub fn momentum_transfer_expansion<T: Real, const D: usize>(
    v: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
) -> Result<(Vector<T, D>, ExpansionCoeffs<T, D>)> {
    let speed = v.norm();
    if speed <= T::zero() {
        return Err(Error::DegenerateVelocity { speed: speed.as_f64() });
    }
    let e = *v * speed.recip();
    let zero = ExpansionCoeffs { alpha1: Vector::zero(), alpha2: Vector::zero(), beta0: T::zero(), beta1: T::zero() };
    let Some((la, lb)) = chord(&params.b) else {
        return Ok((Vector::zero(), zero));
    };
    if params.c == T::zero() {
        return Ok((Vector::zero(), zero));
    }
    let fr = Frame { s, p: params };
    let y0 = params.b - e * T::lit(0.5);
    let a1 = integrate_vec(|l| fr.force(&(y0 + e * l), &params.phase).0, la, lb, opts())?;
    let a2 = integrate_vec(|l| (fr.force_dtau(&(y0 + e * l), &params.phase) * l).0, la, lb, opts())?;
    let alpha1 = Vector(a1.value) * params.c;
    let alpha2 = Vector(a2.value) * params.c;
    let coeffs = ExpansionCoeffs { alpha1, alpha2, beta0: e.dot(&alpha1), beta1: e.dot(&alpha2) };
    Ok((alpha1 * speed.recip() + alpha2 * (speed * speed).recip(), coeffs))
}

/// `β⁽¹⁾ = c∫∂_τW(M⁻¹(b+λe), φ)dλ` for a gradient scatterer.
pub fn beta1_line_integral<T: Real, const D: usize>(
    e: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
) -> Result<T> {
    let Some((la, lb)) = chord(&params.b) else { return Ok(T::zero()) };
    let fr = Frame { s, p: params };
    let y0 = params.b - *e * T::lit(0.5);
    let (v, _) = integrate(|l| fr.potential_dtau(&(y0 + *e * l), &params.phase), la, lb, opts())?;
    Ok(params.c * v)
}

/// `β⁽⁰⁾ = c∫e·M g(M⁻¹(b+(λ−½)e), φ)dλ`, the velocity-independent energy transfer.
pub fn beta0_line_integral<T: Real, const D: usize>(
    e: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
) -> Result<T> {
    let Some((la, lb)) = chord(&params.b) else { return Ok(T::zero()) };
    let fr = Frame { s, p: params };
    let y0 = params.b - *e * T::lit(0.5);
    let (v, _) = integrate(|l| e.dot(&fr.force(&(y0 + *e * l), &params.phase)), la, lb, opts())?;
    Ok(params.c * v)
}

/// First- and second-order energy transfer `ΔK_I`, `ΔK_II` for a gradient scatterer.
///
/// Both are evaluated along the unperturbed line with the exact passage times,
/// so the remainder is third order in the coupling.
pub fn energy_transfer_expansion<T: Real, const D: usize>(
    v: &Vector<T, D>,
    params: &ScatterParams<T, D>,
    s: &SmoothScatterer<T, D>,
) -> Result<(T, T)> {
    if !s.is_gradient() {
        return Err(Error::InvalidParameter("energy transfer expansion needs a gradient field".into()));
    }
    let speed = v.norm();
    if speed <= T::zero() {
        return Err(Error::DegenerateVelocity { speed: speed.as_f64() });
    }
    let Some((la, lb)) = chord(&params.b) else { return Ok((T::zero(), T::zero())) };
    let c = params.c;
    if c == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let e = *v * speed.recip();
    let y0 = params.b - e * T::lit(0.5);
    let prof = s.profile();
    let fr = Frame { s, p: params };
    let at = |l: T| (y0 + e * l, prof.shift(&params.phase, l / speed));

    let (i1, _) = integrate(
        |l| {
            let (y, phi) = at(l);
            fr.potential_dtau(&y, &phi)
        },
        la,
        lb,
        opts(),
    )?;
    let dk1 = c * i1 / speed;

    // ∇W = −g, ∇∂_τW = −∂_τ g; the two signs cancel in the product.
    let inner_opts = QuadratureOptions { abs_tol: 1e-12, rel_tol: 0.0, max_intervals: 4000 };
    let mut failure = None;
    let (i2, _) = integrate(
        |l| {
            if l <= la {
                return T::zero();
            }
            let inner = integrate_vec(
                |sv| {
                    let (y, phi) = at(sv);
                    (fr.force(&y, &phi) * (l - sv)).0
                },
                la,
                l,
                inner_opts,
            );
            match inner {
                Ok(est) => {
                    let (y, phi) = at(l);
                    fr.force_dtau(&y, &phi).dot(&Vector(est.value))
                }
                Err(err) => {
                    failure.get_or_insert(err);
                    T::zero()
                }
            }
        },
        la,
        lb,
        opts(),
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    let dk2 = -(c * c) * i2 / (speed * speed * speed);
    Ok((dk1, dk2))
}
