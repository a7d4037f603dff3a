//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and subdivision budget for [`integrate_vec`].
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: 2000 }
    }
}

/// Integral estimate with its error bound.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<T, const K: usize> {
    pub value: [T; K],
    pub error: T,
}

struct Panel<T, const K: usize> {
    a: T,
    b: T,
    value: [T; K],
    error: T,
}

fn kronrod<T: Real, const K: usize>(f: &mut impl FnMut(T) -> [T; K], a: T, b: T) -> Panel<T, K> {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut k = [T::zero(); K];
    let mut g = [T::zero(); K];
    for c in 0..K {
        k[c] = fc[c] * T::lit(WGK[7]);
        g[c] = fc[c] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        for c in 0..K {
            let s = f1[c] + f2[c];
            k[c] += s * T::lit(WGK[j]);
            if j % 2 == 1 {
                g[c] += s * T::lit(WG[j / 2]);
            }
        }
    }
    let mut err = T::zero();
    let mut value = [T::zero(); K];
    for c in 0..K {
        value[c] = k[c] * half;
        err = err.max(((k[c] - g[c]) * half).abs());
    }
    Panel { a, b, value, error: err }
}

/// Integrates a `K`-component function over `[a, b]`.
///
/// Subdivides the panel with the largest error until the summed error is below
/// `max(abs_tol, rel_tol * |I|)` in every component.
pub fn integrate_vec<T: Real, const K: usize>(
    mut f: impl FnMut(T) -> [T; K],
    a: T,
    b: T,
    opts: QuadratureOptions,
) -> Result<Estimate<T, K>> {
    if a == b {
        return Ok(Estimate { value: [T::zero(); K], error: T::zero() });
    }
    let mut panels = vec![kronrod(&mut f, a, b)];
    loop {
        let mut total = [T::zero(); K];
        let mut err = T::zero();
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            for c in 0..K {
                total[c] += p.value[c];
            }
            err += p.error;
            if p.error > panels[worst].error {
                worst = i;
            }
        }
        let scale = total.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let target = T::lit(opts.abs_tol).max(T::lit(opts.rel_tol) * scale);
        if err <= target {
            return Ok(Estimate { value: total, error: err });
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure { tol: target.as_f64(), estimate: err.as_f64() });
        }
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * T::lit(0.5);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureFailure { tol: target.as_f64(), estimate: err.as_f64() });
        }
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    opts: QuadratureOptions,
) -> Result<(T, T)> {
    let est = integrate_vec(|x| [f(x)], a, b, opts)?;
    Ok((est.value[0], est.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = integrate(|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, Default::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn bump_function_integral_converges() {
        // ∫_{-1}^{1} exp(-1/(1-x^2)) dx = 0.443993816168079...
        let bump = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let (v, err) = integrate(bump, -1.0, 1.0, Default::default()).unwrap();
        assert!((v - 0.443_993_816_168_079_4).abs() < 1e-10, "{v}");
        assert!(err < 1e-10);
    }

    #[test]
    fn vector_components_share_evaluations() {
        let mut calls = 0;
        let est = integrate_vec(
            |x: f64| {
                calls += 1;
                [x.sin(), x.cos()]
            },
            0.0,
            std::f64::consts::PI,
            Default::default(),
        )
        .unwrap();
        assert!((est.value[0] - 2.0).abs() < 1e-12);
        assert!(est.value[1].abs() < 1e-12);
        assert!(calls >= 15);
    }

    #[test]
    fn impossible_tolerance_reports_failure() {
        let opts = QuadratureOptions { abs_tol: 1e-30, rel_tol: 0.0, max_intervals: 4 };
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, opts);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
