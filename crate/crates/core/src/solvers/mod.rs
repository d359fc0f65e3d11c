//! Baseline solvers for the sparse inverse problem `Φ a ≈ f`.
//!
//! Every solver returns a [`SparseSolution`] whose residual is recomputed
//! from the inputs, so solutions from different methods compare directly.

mod cs;
mod lasso;
mod ls;
mod ols;
mod sindy;

pub use cs::{solve_cs, solve_cs_cv, solve_cs_with, CsOptions};
pub use lasso::{lasso_lambda_grid, solve_lasso, solve_lasso_cv, solve_lasso_with, LassoOptions};
pub use ls::solve_ls;
pub use ols::{ols_greedy_order, solve_ols, solve_ols_cv};
pub use sindy::{solve_sindy, solve_tw, stlsq_from_support};

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::basis::BasisMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverId {
    Ls,
    Ols,
    Lasso,
    Cs,
    Sindy,
    Tw,
    Er,
}

impl SolverId {
    pub const ALL: [SolverId; 7] = [
        SolverId::Ls,
        SolverId::Ols,
        SolverId::Lasso,
        SolverId::Cs,
        SolverId::Sindy,
        SolverId::Tw,
        SolverId::Er,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverId::Ls => "ls",
            SolverId::Ols => "ols",
            SolverId::Lasso => "lasso",
            SolverId::Cs => "cs",
            SolverId::Sindy => "sindy",
            SolverId::Tw => "tw",
            SolverId::Er => "er",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverId::ALL
            .into_iter()
            .find(|id| id.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown solver `{s}`")))
    }
}

/// Coefficients found by a solver, with the bookkeeping needed to audit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    pub coefficients: Vec<f64>,
    /// Indices of the nonzero coefficients, ascending.
    pub support: Vec<usize>,
    pub solver: SolverId,
    /// Hyperparameters actually used, plus solver-specific diagnostics.
    pub hyperparams: BTreeMap<String, Value>,
    /// `‖Φa − f‖₂` on the data the solver was given.
    pub residual_norm: f64,
    /// False when an iterative solver hit its iteration cap or the problem
    /// was infeasible; the coefficients are then the last iterate.
    pub converged: bool,
}

impl SparseSolution {
    pub(crate) fn new(phi: &DMatrix<f64>, f: &DVector<f64>, coefficients: DVector<f64>, solver: SolverId) -> Self {
        let support = coefficients
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        let residual_norm = (phi * &coefficients - f).norm();
        SparseSolution {
            coefficients: coefficients.iter().copied().collect(),
            support,
            solver,
            hyperparams: BTreeMap::new(),
            residual_norm,
            converged: true,
        }
    }

    pub(crate) fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.hyperparams.insert(key.to_string(), value.into());
        self
    }

    /// All-zero solution.
    pub fn zeros(phi: &BasisMatrix, f: &[f64], solver: SolverId) -> Self {
        let (a, b) = (phi.values(), DVector::from_column_slice(f));
        Self::new(a, &b, DVector::zeros(a.ncols()), solver)
    }

    pub fn coefficient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coefficients)
    }
}

/// Shared input checks; returns `f` as a vector.
pub(crate) fn check_inputs(phi: &BasisMatrix, f: &[f64]) -> Result<DVector<f64>> {
    if phi.n_samples() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but the target has {} entries",
            phi.n_samples(),
            f.len()
        )));
    }
    if f.is_empty() {
        return Err(Error::InvalidArgument("empty target".into()));
    }
    if f.iter().chain(phi.values().iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("inputs contain non-finite values".into()));
    }
    Ok(DVector::from_column_slice(f))
}

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `count` values from `lo` to `hi`, evenly spaced in log scale (ascending
/// when `lo < hi`).
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| match i {
                    0 => lo,
                    _ if i == count - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// K-fold cross-validation over a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationPlan {
    pub n_folds: usize,
    pub grid: Vec<f64>,
}

impl CrossValidationPlan {
    pub fn new(n_folds: usize, grid: Vec<f64>) -> Self {
        CrossValidationPlan { n_folds, grid }
    }

    /// 50 thresholds log-spaced over `[1e-6, 100]`.
    pub fn ols_default() -> Self {
        Self::new(5, log_space(1e-6, 100.0, 50))
    }

    /// Relative `ε/‖f‖` values for basis pursuit denoising.
    pub fn cs_default() -> Self {
        Self::new(5, log_space(1e-4, 0.5, 10))
    }

    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("cross-validation grid is empty".into()));
        }
        if self.n_folds < 2 || self.n_folds > n_samples {
            return Err(Error::InvalidArgument(format!(
                "{} folds cannot partition {n_samples} samples",
                self.n_folds
            )));
        }
        Ok(())
    }

    /// Contiguous folds partitioning `0..n_samples`.
    pub fn folds(&self, n_samples: usize) -> Vec<std::ops::Range<usize>> {
        (0..self.n_folds)
            .map(|i| i * n_samples / self.n_folds..(i + 1) * n_samples / self.n_folds)
            .collect()
    }
}

/// Held-out residual norm for each grid entry.
///
/// `fit_path(phi_train, f_train)` returns one coefficient vector per grid
/// entry, in grid order.
pub(crate) fn cv_scores<F>(phi: &DMatrix<f64>, f: &DVector<f64>, plan: &CrossValidationPlan, fit_path: F) -> Vec<f64>
where
    F: Fn(&DMatrix<f64>, &DVector<f64>) -> Vec<DVector<f64>> + Sync,
{
    let n = f.len();
    let per_fold: Vec<Vec<f64>> = plan
        .folds(n)
        .into_par_iter()
        .map(|test| {
            let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
            let test: Vec<usize> = test.collect();
            let phi_train = phi.select_rows(&train);
            let f_train = DVector::from_iterator(train.len(), train.iter().map(|&i| f[i]));
            let phi_test = phi.select_rows(&test);
            let f_test = DVector::from_iterator(test.len(), test.iter().map(|&i| f[i]));
            fit_path(&phi_train, &f_train)
                .iter()
                .map(|a| (&phi_test * a - &f_test).norm_squared())
                .collect()
        })
        .collect();
    (0..plan.grid.len())
        .map(|g| per_fold.iter().map(|s| s[g]).sum::<f64>().sqrt())
        .collect()
}

/// Index of the smallest score; the first wins ties, NaN never wins.
pub(crate) fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}
