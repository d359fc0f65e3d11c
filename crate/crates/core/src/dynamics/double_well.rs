//! Static regression of the double-well potential `V(x) = x⁴ − x²`.

use serde::{Deserialize, Serialize};

use super::{GroundTruth, TimeSeriesSet};
use crate::basis::Monomial;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellConfig {
    pub n_samples: usize,
    pub lo: f64,
    pub hi: f64,
    /// `(x, value)`: the sample nearest `x` has its target replaced.
    pub outlier: Option<(f64, f64)>,
}

impl Default for DoubleWellConfig {
    fn default() -> Self {
        DoubleWellConfig {
            n_samples: 61,
            lo: -1.2,
            hi: 1.2,
            outlier: Some((0.52, 0.5)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DoubleWellData {
    /// Sample locations as a one-dimensional series (the spacing plays the
    /// role of `dt`).
    pub x: TimeSeriesSet,
    /// Target values `V(x)` after corruption.
    pub f: Vec<f64>,
    /// Index of the corrupted sample, if any.
    pub outlier_index: Option<usize>,
}

pub fn double_well_potential(x: f64) -> f64 {
    x.powi(4) - x.powi(2)
}

pub fn double_well_dataset(config: &DoubleWellConfig) -> Result<DoubleWellData> {
    if config.n_samples < 2 || !(config.hi > config.lo) {
        return Err(Error::InvalidArgument("need at least two samples on a nonempty interval".into()));
    }
    let h = (config.hi - config.lo) / (config.n_samples - 1) as f64;
    let xs: Vec<f64> = (0..config.n_samples).map(|i| config.lo + i as f64 * h).collect();
    let mut f: Vec<f64> = xs.iter().map(|&x| double_well_potential(x)).collect();
    let outlier_index = config.outlier.map(|(at, value)| {
        let idx = (0..xs.len())
            .min_by(|&a, &b| (xs[a] - at).abs().total_cmp(&(xs[b] - at).abs()))
            .unwrap_or(0);
        f[idx] = value;
        idx
    });
    let x = TimeSeriesSet::from_rows_at(xs.into_iter().map(|v| vec![v]).collect(), config.lo, h)?;
    Ok(DoubleWellData { x, f, outlier_index })
}

/// `−x² + x⁴` in the univariate library of degree `max_degree`.
pub fn double_well_ground_truth(max_degree: u32) -> Result<GroundTruth> {
    if max_degree < 4 {
        return Err(Error::InvalidArgument("the double well needs a degree-4 library".into()));
    }
    let terms = [(0, Monomial::new(vec![2]), -1.0), (0, Monomial::new(vec![4]), 1.0)];
    GroundTruth::from_terms(1, 1, max_degree, &terms)
}
