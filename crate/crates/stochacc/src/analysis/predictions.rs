use serde::{Deserialize, Serialize};

use super::accumulator::Observable;
use super::grid::GridKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceClass {
    Gradient,
    NonGradient,
}

/// Predicted asymptotic exponent of one moment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub grid: GridKind,
    pub observable: Observable,
    pub exponent: f64,
    pub tol: f64,
    /// Only an upper bound is predicted.
    pub upper_bound: bool,
}

const fn p(grid: GridKind, observable: Observable, exponent: f64, tol: f64) -> Prediction {
    Prediction { grid, observable, exponent, tol, upper_bound: false }
}

/// Exponents expected for moments on collision and time grids.
pub fn predictions(class: ForceClass, dim: usize) -> Vec<Prediction> {
    use GridKind::{ByCollision as N, ByTime as T};
    use Observable::*;
    match class {
        ForceClass::Gradient => {
            let mut v = vec![
                p(N, V2, 1.0 / 3.0, 0.05),
                p(N, InvV, -1.0 / 6.0, 0.05),
                p(N, InvV2, -1.0 / 3.0, 0.05),
                p(N, Tau, 5.0 / 6.0, 0.05),
                p(T, V2, 2.0 / 5.0, 0.05),
            ];
            if dim == 1 {
                v.push(p(N, Y, 1.0, 0.1));
                v.push(p(T, Y2, 12.0 / 5.0, 0.15));
                v.push(Prediction { upper_bound: true, ..p(T, Y, 6.0 / 5.0, 0.05) });
            } else {
                v.push(p(N, Y2, 5.0 / 3.0, 0.1));
                v.push(p(T, Y2, 2.0, 0.1));
            }
            v
        }
        ForceClass::NonGradient => vec![
            p(N, V2, 0.5, 0.05),
            p(N, Tau, 0.75, 0.05),
            p(T, V, 1.0 / 3.0, 0.05),
            p(T, Y, 4.0 / 3.0, 0.1),
        ],
    }
}
