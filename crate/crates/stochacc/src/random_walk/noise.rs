use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Zero-mean, unit-variance law for the reduced-walk increments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Normal,
    /// Uniform on `[−√3, √3]`.
    Uniform,
    /// `±1` with equal probability.
    Rademacher,
}

impl NoiseLaw {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}
