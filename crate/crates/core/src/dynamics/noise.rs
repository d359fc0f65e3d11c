//! Gaussian observation noise with occasional large outliers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TimeSeriesSet;
use crate::{Error, Result};

/// Each entry receives `N(0, ε₁²)` with probability `1 − p` and
/// `N(0, ε₁² + ε₂²)` with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eps1: f64,
    #[serde(default)]
    pub eps2: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    /// Draw the outlier coin once per time row instead of per entry.
    #[serde(default)]
    pub per_row: bool,
}

impl NoiseModel {
    pub fn gaussian(eps1: f64, seed: u64) -> Self {
        NoiseModel {
            eps1,
            eps2: 0.0,
            p: 0.0,
            seed,
            per_row: false,
        }
    }

    pub fn outliers(eps1: f64, eps2: f64, p: f64, seed: u64) -> Self {
        NoiseModel {
            eps1,
            eps2,
            p,
            seed,
            per_row: false,
        }
    }

    pub fn none() -> Self {
        Self::gaussian(0.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps1 >= 0.0 && self.eps1.is_finite() && self.eps2 >= 0.0 && self.eps2.is_finite()) {
            return Err(Error::InvalidArgument("noise levels must be finite and nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("outlier probability {} outside [0, 1]", self.p)));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

pub fn inject_noise(series: &TimeSeriesSet, model: &NoiseModel) -> Result<TimeSeriesSet> {
    inject_noise_with_mask(series, model).map(|(s, _)| s)
}

/// Like [`inject_noise`] but also returns which entries (row-major) drew the
/// outlier branch.
pub fn inject_noise_with_mask(series: &TimeSeriesSet, model: &NoiseModel) -> Result<(TimeSeriesSet, Vec<bool>)> {
    model.validate()?;
    let mut out = series.clone();
    let n = series.state_dim();
    let mut mask = vec![false; series.states().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let base = model.eps1;
    let wide = model.eps1.hypot(model.eps2);
    let mut row_outlier = false;
    for (idx, v) in out.states_mut().iter_mut().enumerate() {
        let outlier = if model.per_row {
            if idx % n == 0 {
                row_outlier = rng.random_bool(model.p);
            }
            row_outlier
        } else {
            rng.random_bool(model.p)
        };
        mask[idx] = outlier;
        let std = if outlier { wide } else { base };
        let z: f64 = rng.sample(StandardNormal);
        // Zero variance leaves the value (and its sign bit) untouched.
        if std > 0.0 {
            *v += std * z;
        }
    }
    Ok((out, mask))
}
