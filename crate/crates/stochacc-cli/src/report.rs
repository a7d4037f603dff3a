//! Comparison of measured exponents and coefficients with their predicted values.

use std::fmt::Write as _;

use serde::Serialize;
use stochacc::analysis::{predictions, ForceClass, GridKind, PowerLawFit};

use crate::config::{EngineKind, WalkMode};
use crate::record::RunRecord;

/// `M*` exponent and the crossover-scale exponents of the gradient case.
const M_STAR: (f64, f64) = (4.0, 0.5);
const N_STAR: (f64, f64) = (6.0, 1.0);
const TAU_STAR: (f64, f64) = (5.0, 1.0);
const KS_MAX: f64 = 0.05;
const CHANGEVAR_MAX: f64 = 0.01;
const DIFFUSION_REL: f64 = 0.05;
/// Drift agreement in units of the combined standard error.
const DRIFT_SIGMAS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// No fit was possible, e.g. the local slope never settled.
    Unsettled,
    /// Measured, but nothing is predicted for it.
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Unsettled => "unsettled",
            Self::Info => "-",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub record: String,
    pub class: ForceClass,
    pub dim: usize,
    pub v0: Option<f64>,
    pub quantity: String,
    pub measured: Option<f64>,
    pub stderr: Option<f64>,
    /// Predicted value and tolerance, shown as `≤ value + tol` for bounds.
    pub predicted: Option<f64>,
    pub tol: Option<f64>,
    pub upper_bound: bool,
    pub status: Status,
}

fn grid_label(g: GridKind) -> &'static str {
    match g {
        GridKind::ByCollision => "n",
        GridKind::ByTime => "tau",
    }
}

fn judge(measured: Option<f64>, predicted: Option<f64>, tol: Option<f64>, upper_bound: bool) -> Status {
    match (measured, predicted, tol) {
        (None, Some(_), _) => Status::Unsettled,
        (Some(m), Some(p), Some(t)) => {
            let ok = if upper_bound { m <= p + t } else { (m - p).abs() <= t };
            if ok {
                Status::Pass
            } else {
                Status::Fail
            }
        }
        _ => Status::Info,
    }
}

struct Builder<'a> {
    rec: &'a RunRecord,
    rows: Vec<ReportRow>,
}

impl Builder<'_> {
    fn class(&self) -> ForceClass {
        // The lattice is a gradient system whatever the config says.
        if self.rec.config.engine == EngineKind::Lattice {
            ForceClass::Gradient
        } else {
            self.rec.config.model.force
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        v0: Option<f64>,
        quantity: String,
        measured: Option<f64>,
        stderr: Option<f64>,
        predicted: Option<f64>,
        tol: Option<f64>,
        upper_bound: bool,
    ) {
        self.rows.push(ReportRow {
            record: self.rec.config.name.clone(),
            class: self.class(),
            dim: self.rec.config.dimension,
            v0,
            quantity,
            measured,
            stderr,
            predicted,
            tol,
            upper_bound,
            status: judge(measured, predicted, tol, upper_bound),
        });
    }

    fn slope(&mut self, quantity: &str, fit: Option<&PowerLawFit<f64>>, pred: Option<(f64, f64)>) {
        self.push(
            None,
            quantity.into(),
            fit.map(|f| f.exponent),
            fit.map(|f| f.stderr),
            pred.map(|p| p.0),
            pred.map(|p| p.1),
            false,
        );
    }
}

/// Rows for one record; predictions follow the record's force class and dimension.
pub fn rows_for(rec: &RunRecord) -> Vec<ReportRow> {
    let mut b = Builder { rec, rows: Vec::new() };
    let class = b.class();
    let dim = rec.config.dimension;
    let preds = predictions(class, dim);
    let reduced = rec.config.engine == EngineKind::Walk && rec.config.walk.mode == WalkMode::Reduced;
    for run in &rec.runs {
        for f in &run.fits {
            // Reduced walks only predict the collision-grid speed law.
            let p = preds.iter().find(|p| p.grid == f.grid && p.observable == f.observable);
            let p = if reduced && f.observable != stochacc::analysis::Observable::V2 { None } else { p };
            b.push(
                Some(run.v0),
                format!("<{}> vs {}", f.observable.name(), grid_label(f.grid)),
                f.fit.map(|x| x.exponent),
                f.fit.map(|x| x.stderr),
                p.map(|p| p.exponent),
                p.map(|p| p.tol),
                p.is_some_and(|p| p.upper_bound),
            );
        }
    }
    let gradient = class == ForceClass::Gradient;
    if let Some(c) = &rec.crossover {
        b.slope("N* vs v0", c.n_star_fit.as_ref(), gradient.then_some(N_STAR));
        b.slope("tau* vs v0", c.tau_star_fit.as_ref(), gradient.then_some(TAU_STAR));
    }
    if let Some(d) = &rec.decorrelation {
        b.slope("M* vs v0", d.m_star_fit.as_ref(), gradient.then_some(M_STAR));
    }
    for r in &rec.bessel {
        b.push(None, format!("KS gamma={:.4}", r.gamma), Some(r.ks), None, Some(0.0), Some(KS_MAX), true);
    }
    if let Some(c) = &rec.coeffs {
        let (d2, d2e, drift, drifte) = c.diffusion_drift();
        for row in &rec.oracle {
            let v = Some(row.moments.speed);
            let tol = DRIFT_SIGMAS * (row.drift_stderr.powi(2) + drifte.powi(2)).sqrt();
            b.push(v, "drift (oracle vs quadrature)".into(), Some(row.drift), Some(row.drift_stderr), Some(drift), Some(tol), false);
            b.push(
                v,
                "diffusion (oracle vs quadrature)".into(),
                Some(row.diffusion),
                Some(row.diffusion_stderr),
                Some(d2),
                Some(DIFFUSION_REL * d2.abs()),
                false,
            );
        }
        if rec.oracle.is_empty() {
            b.push(None, "diffusion coefficient".into(), Some(d2), Some(d2e), None, None, false);
            b.push(None, "drift coefficient".into(), Some(drift), Some(drifte), None, None, false);
        }
    }
    for r in &rec.changevar {
        let name = serde_json::to_value(r.function).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        b.push(None, format!("changevar {name} rel diff"), Some(r.result.rel_diff), None, Some(0.0), Some(CHANGEVAR_MAX), true);
    }
    b.rows
}

fn num(x: Option<f64>) -> String {
    match x {
        None => "-".into(),
        Some(v) if v == 0.0 || (1e-3..1e5).contains(&v.abs()) => format!("{v:.4}"),
        Some(v) => format!("{v:.4e}"),
    }
}

/// Plain-text table over several records.
pub fn render(rows: &[ReportRow]) -> String {
    let header = ["record", "class", "d", "v0", "quantity", "measured", "stderr", "predicted", "status"];
    let body: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            let pred = match (r.predicted, r.tol) {
                (Some(p), Some(t)) if r.upper_bound => format!("<= {}", num(Some(p + t))),
                (Some(p), Some(t)) => format!("{} ± {}", num(Some(p)), num(Some(t))),
                _ => "-".into(),
            };
            let class = match r.class {
                ForceClass::Gradient => "gradient",
                ForceClass::NonGradient => "non-gradient",
            };
            [
                r.record.clone(),
                class.into(),
                r.dim.to_string(),
                num(r.v0),
                r.quantity.clone(),
                num(r.measured),
                num(r.stderr),
                pred,
                r.status.label().into(),
            ]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    for row in &body {
        line(&mut out, row);
    }
    out
}
