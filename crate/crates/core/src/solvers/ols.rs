//! Orthogonal least squares: forward selection by largest residual reduction.

use nalgebra::{DMatrix, DVector};

use super::{argmin_first, check_inputs, cv_scores, require_positive, CrossValidationPlan, SolverId, SparseSolution};
use crate::basis::BasisMatrix;
use crate::linalg::{axpy, dot, lstsq_on_columns};
use crate::Result;

/// Columns whose orthogonalized norm falls below this fraction of the
/// original are treated as already spanned.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Full greedy order: each entry is `(column, ‖r‖₂ after adding it)`.
/// Selection stops early once the residual reaches `stop_below`.
pub fn ols_greedy_order(phi: &DMatrix<f64>, f: &DVector<f64>, stop_below: f64) -> Vec<(usize, f64)> {
    let (n, k) = phi.shape();
    let mut r: Vec<f64> = f.iter().copied().collect();
    // Working copies of every column, kept orthogonal to the selected span.
    let mut w: Vec<Vec<f64>> = (0..k).map(|j| phi.column(j).iter().copied().collect()).collect();
    let norms0: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut available = vec![true; k];
    let mut order = Vec::new();
    let mut rnorm = dot(&r, &r).sqrt();
    while rnorm > stop_below && order.len() < n.min(k) {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if !available[j] {
                continue;
            }
            let wn2 = dot(&w[j], &w[j]);
            if wn2.sqrt() <= DEPENDENCE_TOL * norms0[j] || wn2 == 0.0 {
                available[j] = false;
                continue;
            }
            let c = dot(&w[j], &r);
            let gain = c * c / wn2;
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let Some((j, _)) = best else { break };
        available[j] = false;
        let norm = dot(&w[j], &w[j]).sqrt();
        let q: Vec<f64> = w[j].iter().map(|v| v / norm).collect();
        let c = dot(&q, &r);
        axpy(-c, &q, &mut r);
        for (i, col) in w.iter_mut().enumerate() {
            if available[i] {
                let c = dot(&q, col);
                axpy(-c, &q, col);
            }
        }
        rnorm = dot(&r, &r).sqrt();
        order.push((j, rnorm));
    }
    order
}

/// Number of greedy steps taken before the residual reaches `threshold`.
fn steps_for(f_norm: f64, order: &[(usize, f64)], threshold: f64) -> usize {
    if f_norm <= threshold {
        return 0;
    }
    order
        .iter()
        .position(|&(_, r)| r <= threshold)
        .map_or(order.len(), |p| p + 1)
}

fn ols_fit(phi: &DMatrix<f64>, f: &DVector<f64>, threshold: f64) -> DVector<f64> {
    let order = ols_greedy_order(phi, f, threshold);
    let mut support: Vec<usize> = order.iter().map(|&(j, _)| j).collect();
    support.sort_unstable();
    lstsq_on_columns(phi, f, &support)
}

/// Adds columns in order of largest residual reduction until `‖r‖₂ ≤
/// threshold` or no independent column remains, then refits by least squares.
pub fn solve_ols(phi: &BasisMatrix, f: &[f64], threshold: f64) -> Result<SparseSolution> {
    require_positive("threshold", threshold)?;
    let fv = check_inputs(phi, f)?;
    let a = ols_fit(phi.values(), &fv, threshold);
    Ok(SparseSolution::new(phi.values(), &fv, a, SolverId::Ols).with("threshold", threshold))
}

/// Picks the threshold with the smallest held-out residual, then refits on
/// all rows.
pub fn solve_ols_cv(phi: &BasisMatrix, f: &[f64], plan: &CrossValidationPlan) -> Result<SparseSolution> {
    let fv = check_inputs(phi, f)?;
    plan.validate(fv.len())?;
    for &t in &plan.grid {
        require_positive("threshold", t)?;
    }
    let scores = cv_scores(phi.values(), &fv, plan, |p, y| {
        let min = plan.grid.iter().copied().fold(f64::INFINITY, f64::min);
        let order = ols_greedy_order(p, y, min);
        let f_norm = y.norm();
        plan.grid
            .iter()
            .map(|&t| {
                let mut support: Vec<usize> = order[..steps_for(f_norm, &order, t)].iter().map(|&(j, _)| j).collect();
                support.sort_unstable();
                lstsq_on_columns(p, y, &support)
            })
            .collect()
    });
    let best = argmin_first(&scores);
    let threshold = plan.grid[best];
    let a = ols_fit(phi.values(), &fv, threshold);
    Ok(SparseSolution::new(phi.values(), &fv, a, SolverId::Ols)
        .with("threshold", threshold)
        .with("cv_grid", plan.grid.clone())
        .with("cv_scores", scores)
        .with("n_folds", plan.n_folds))
}
