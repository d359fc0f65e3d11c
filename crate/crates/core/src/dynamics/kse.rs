//! Odd-subspace Galerkin truncation of the Kuramoto-Sivashinsky equation.
//!
//! With `b_k = i a_k` the mode equations read
//! `ȧ_k = (k² − ν k⁴) a_k − k Σ_m a_m a_{k−m}`, `k = 1..N`, where the
//! convolution keeps only indices in `[−N, N]`, `a_{−m} = −a_m` and `a_0 = 0`.

use serde::{Deserialize, Serialize};

use super::{integrate_rk4, GroundTruth, Sampling, TimeSeriesSet};
use crate::basis::Monomial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KseParams {
    pub nu: f64,
    pub n_modes: usize,
}

impl Default for KseParams {
    fn default() -> Self {
        KseParams {
            nu: 0.029910,
            n_modes: 16,
        }
    }
}

/// `k² − ν k⁴`.
pub fn kse_linear_coefficient(nu: f64, k: usize) -> f64 {
    let k = k as f64;
    k * k - nu * k.powi(4)
}

impl KseParams {
    /// Mode right-hand side; `a[k-1]` holds `a_k`.
    pub fn rhs(&self, a: &[f64], out: &mut [f64]) {
        let n = self.n_modes as i64;
        let mode = |m: i64| -> f64 {
            match m {
                0 => 0.0,
                m if m > 0 => a[(m - 1) as usize],
                m => -a[(-m - 1) as usize],
            }
        };
        for k in 1..=n {
            let mut conv = 0.0;
            for m in (k - n).max(-n)..=n.min(k + n) {
                conv += mode(m) * mode(k - m);
            }
            out[(k - 1) as usize] = kse_linear_coefficient(self.nu, k as usize) * a[(k - 1) as usize] - k as f64 * conv;
        }
    }
}

const KSE_BOUND: f64 = 1e6;

pub fn simulate_kse_modes(params: &KseParams, a0: &[f64], sampling: &Sampling) -> Result<TimeSeriesSet> {
    if params.n_modes == 0 {
        return Err(Error::InvalidArgument("at least one mode is required".into()));
    }
    if a0.len() != params.n_modes {
        return Err(Error::DimensionMismatch(format!(
            "{} initial values for {} modes",
            a0.len(),
            params.n_modes
        )));
    }
    integrate_rk4(|a, o| params.rhs(a, o), a0, sampling, KSE_BOUND)
}

/// Mode equations written in the degree-`max_degree` library over the
/// `n_modes` variables.
///
/// Collecting the truncated convolution onto monomials `a_p a_q` gives
/// `−2k` on `a_m a_{k−m}` (`m < k − m`), `−k` on `a_{k/2}²`, and `+2k` on
/// `a_p a_{k+p}` for `p = 1..N−k` (from the negative-index terms).
pub fn kse_ground_truth(params: &KseParams, max_degree: u32) -> Result<GroundTruth> {
    let n = params.n_modes;
    if n == 0 {
        return Err(Error::InvalidArgument("at least one mode is required".into()));
    }
    if max_degree < 2 {
        return Err(Error::InvalidArgument("the mode equations need a degree-2 library".into()));
    }
    let var = |k: usize| Monomial::variable(n, k - 1);
    let mut terms = Vec::new();
    for k in 1..=n {
        let eq = k - 1;
        let kf = k as f64;
        terms.push((eq, var(k), kse_linear_coefficient(params.nu, k)));
        for m in 1..k {
            let other = k - m;
            if m < other {
                terms.push((eq, var(m).times(&var(other)), -2.0 * kf));
            } else if m == other {
                terms.push((eq, var(m).times(&var(m)), -kf));
            }
        }
        for p in 1..=(n - k) {
            terms.push((eq, var(p).times(&var(k + p)), 2.0 * kf));
        }
    }
    GroundTruth::from_terms(n, n, max_degree, &terms)
}
