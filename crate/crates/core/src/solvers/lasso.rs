//! `min ‖Φa − f‖₂² + λ‖a‖₁` by cyclic coordinate descent on the Gram matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{argmin_first, check_inputs, cv_scores, log_space, CrossValidationPlan, SolverId, SparseSolution};
use crate::basis::BasisMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Relative duality-gap and step tolerance.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-8,
            max_sweeps: 20_000,
        }
    }
}

/// Precomputed quantities shared by every λ on one dataset.
struct Problem {
    gram: DMatrix<f64>,
    phit_f: DVector<f64>,
    f_norm2: f64,
}

impl Problem {
    fn new(phi: &DMatrix<f64>, f: &DVector<f64>) -> Self {
        Problem {
            gram: phi.tr_mul(phi),
            phit_f: phi.tr_mul(f),
            f_norm2: f.norm_squared(),
        }
    }

    /// Minimizes from `a` in place; returns whether a tolerance was met.
    fn solve(&self, lambda: f64, a: &mut DVector<f64>, opts: &LassoOptions) -> bool {
        let k = a.len();
        let half = 0.5 * lambda;
        // c = Φᵀ(f − Φa)
        let mut c = &self.phit_f - &self.gram * &*a;
        let scale = self.f_norm2.max(f64::MIN_POSITIVE);
        for sweep in 0..opts.max_sweeps {
            let mut max_step = 0.0_f64;
            for j in 0..k {
                let g = self.gram[(j, j)];
                if g <= 0.0 {
                    continue;
                }
                let rho = c[j] + g * a[j];
                let new = soft_threshold(rho, half) / g;
                let delta = new - a[j];
                if delta != 0.0 {
                    a[j] = new;
                    c.axpy(-delta, &self.gram.column(j), 1.0);
                    max_step = max_step.max(delta.abs() * g.sqrt());
                }
            }
            if max_step * max_step <= opts.tol * opts.tol * scale {
                return true;
            }
            if sweep % 10 == 9 && self.duality_gap(lambda, a, &c) <= opts.tol * scale {
                return true;
            }
        }
        false
    }

    /// Gap for the objective `‖Φa − f‖² + λ‖a‖₁`, using the rescaled
    /// residual as the dual point.
    fn duality_gap(&self, lambda: f64, a: &DVector<f64>, c: &DVector<f64>) -> f64 {
        let alpha = 0.5 * lambda;
        let a_phit_f = a.dot(&self.phit_f);
        let r2 = (self.f_norm2 - 2.0 * a_phit_f + a.dot(&(&self.gram * a))).max(0.0);
        let f_r = self.f_norm2 - a_phit_f;
        let cmax = c.amax();
        let s = if cmax > alpha { alpha / cmax } else { 1.0 };
        let primal = 0.5 * r2 + alpha * a.lp_norm(1);
        let dual = s * f_r - 0.5 * s * s * r2;
        2.0 * (primal - dual).max(0.0)
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn solve_lasso(phi: &BasisMatrix, f: &[f64], lambda: f64) -> Result<SparseSolution> {
    solve_lasso_with(phi, f, lambda, &LassoOptions::default())
}

pub fn solve_lasso_with(phi: &BasisMatrix, f: &[f64], lambda: f64, opts: &LassoOptions) -> Result<SparseSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    let fv = check_inputs(phi, f)?;
    let problem = Problem::new(phi.values(), &fv);
    let mut a = DVector::zeros(phi.n_candidates());
    let converged = problem.solve(lambda, &mut a, opts);
    let mut s = SparseSolution::new(phi.values(), &fv, a, SolverId::Lasso).with("lambda", lambda);
    s.converged = converged;
    Ok(s)
}

/// `λ_max = 2‖Φᵀf‖∞` (smallest λ with an all-zero solution) down to
/// `λ_max·1e-4`, `count` values, descending.
pub fn lasso_lambda_grid(phi: &BasisMatrix, f: &[f64], count: usize) -> Result<Vec<f64>> {
    let fv = check_inputs(phi, f)?;
    let lmax = 2.0 * phi.values().tr_mul(&fv).amax();
    if lmax == 0.0 {
        return Ok(vec![0.0; count.min(1)]);
    }
    Ok(log_space(lmax, lmax * 1e-4, count))
}

/// Five-fold CV over [`lasso_lambda_grid`] with 10 values (or the grid in
/// `plan` if one is given), warm-starting along the path.
pub fn solve_lasso_cv(phi: &BasisMatrix, f: &[f64], plan: Option<&CrossValidationPlan>) -> Result<SparseSolution> {
    let fv = check_inputs(phi, f)?;
    let plan = match plan {
        Some(p) => p.clone(),
        None => CrossValidationPlan::new(5, lasso_lambda_grid(phi, f, 10)?),
    };
    plan.validate(fv.len())?;
    let opts = LassoOptions::default();
    // Solve the path from the largest λ down.
    let mut path_order: Vec<usize> = (0..plan.grid.len()).collect();
    path_order.sort_by(|&a, &b| plan.grid[b].total_cmp(&plan.grid[a]));
    let path = |p: &DMatrix<f64>, y: &DVector<f64>| {
        let problem = Problem::new(p, y);
        let mut a = DVector::zeros(p.ncols());
        let mut out = vec![DVector::zeros(p.ncols()); plan.grid.len()];
        for &g in &path_order {
            problem.solve(plan.grid[g], &mut a, &opts);
            out[g] = a.clone();
        }
        out
    };
    let scores = cv_scores(phi.values(), &fv, &plan, path);
    let best = argmin_first(&scores);
    let mut s = solve_lasso_with(phi, f, plan.grid[best], &opts)?;
    s.hyperparams.insert("cv_grid".into(), plan.grid.clone().into());
    s.hyperparams.insert("cv_scores".into(), scores.into());
    s.hyperparams.insert("n_folds".into(), plan.n_folds.into());
    Ok(s)
}
