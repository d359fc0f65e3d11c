//! Finite-difference targets for the inverse problem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TimeSeriesSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    /// `(z(t+1) − z(t)) / dt`, aligned with `z(t)`.
    Forward,
    /// `(z(t+1) − z(t−1)) / 2dt` on interior samples.
    #[default]
    Central,
    /// Next-state target `z(t+1)` for discrete-time maps.
    Map,
}

impl DerivativeScheme {
    fn min_samples(self) -> usize {
        match self {
            DerivativeScheme::Central => 3,
            DerivativeScheme::Forward | DerivativeScheme::Map => 2,
        }
    }
}

/// Returns the target matrix (ℓ′×N) and the states it is aligned with.
pub fn estimate_derivatives(series: &TimeSeriesSet, scheme: DerivativeScheme) -> Result<(DMatrix<f64>, TimeSeriesSet)> {
    let len = series.len();
    let needed = scheme.min_samples();
    if len < needed {
        return Err(Error::TooShort { needed, got: len });
    }
    let n = series.state_dim();
    let times = series.times();
    let (rows, aligned) = match scheme {
        DerivativeScheme::Central => (1..len - 1, series.slice(1, len - 1)),
        DerivativeScheme::Forward | DerivativeScheme::Map => (0..len - 1, series.slice(0, len - 1)),
    };
    let start = rows.start;
    let mut f = DMatrix::zeros(rows.len(), n);
    for t in rows {
        for i in 0..n {
            f[(t - start, i)] = match scheme {
                DerivativeScheme::Central => {
                    (series.state(t + 1)[i] - series.state(t - 1)[i]) / (times[t + 1] - times[t - 1])
                }
                DerivativeScheme::Forward => (series.state(t + 1)[i] - series.state(t)[i]) / (times[t + 1] - times[t]),
                DerivativeScheme::Map => series.state(t + 1)[i],
            };
        }
    }
    Ok((f, aligned))
}
