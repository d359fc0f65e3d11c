//! Sequentially thresholded least squares and its row-trimming variant.

use nalgebra::{DMatrix, DVector};

use super::{check_inputs, require_positive, SolverId, SparseSolution};
use crate::basis::BasisMatrix;
use crate::linalg::lstsq_on_rows_columns;
use crate::{Error, Result};

/// Refit on `support`, drop coefficients with `|a_i| < λ`, repeat until the
/// support stops changing.
fn stlsq(phi: &DMatrix<f64>, f: &DVector<f64>, rows: &[usize], lambda: f64, mut support: Vec<usize>) -> DVector<f64> {
    loop {
        let a = lstsq_on_rows_columns(phi, f, rows, &support);
        let kept: Vec<usize> = support.iter().copied().filter(|&i| !(a[i].abs() < lambda)).collect();
        if kept.len() == support.len() {
            return a;
        }
        support = kept;
    }
}

pub fn solve_sindy(phi: &BasisMatrix, f: &[f64], lambda: f64) -> Result<SparseSolution> {
    stlsq_from_support(phi, f, lambda, &(0..phi.n_candidates()).collect::<Vec<_>>())
}

/// Sequential thresholding started from a given support instead of the
/// full library.
pub fn stlsq_from_support(phi: &BasisMatrix, f: &[f64], lambda: f64, support: &[usize]) -> Result<SparseSolution> {
    require_positive("lambda", lambda)?;
    let fv = check_inputs(phi, f)?;
    if support.iter().any(|&i| i >= phi.n_candidates()) {
        return Err(Error::InvalidArgument("support index out of range".into()));
    }
    let rows: Vec<usize> = (0..fv.len()).collect();
    let a = stlsq(phi.values(), &fv, &rows, lambda, support.to_vec());
    Ok(SparseSolution::new(phi.values(), &fv, a, SolverId::Sindy).with("lambda", lambda))
}

const TW_MAX_ITERATIONS: usize = 100;

/// Alternates a thresholded fit on the trusted rows with re-trimming: row
/// `t` is distrusted when `|(Φa − f)_t| > μ‖Φa − f‖₂/√ℓ`, the norm taken
/// over all rows. Stops when `‖Δa‖₂ < tol`.
pub fn solve_tw(phi: &BasisMatrix, f: &[f64], lambda: f64, mu: f64, tol: f64) -> Result<SparseSolution> {
    require_positive("lambda", lambda)?;
    require_positive("mu", mu)?;
    require_positive("tol", tol)?;
    let fv = check_inputs(phi, f)?;
    let a_mat = phi.values();
    let n = fv.len();
    let all_columns: Vec<usize> = (0..phi.n_candidates()).collect();
    let all_rows: Vec<usize> = (0..n).collect();
    let mut a = stlsq(a_mat, &fv, &all_rows, lambda, all_columns.clone());
    let mut trusted = all_rows;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < TW_MAX_ITERATIONS {
        iterations += 1;
        let r = a_mat * &a - &fv;
        let cut = mu * r.norm() / (n as f64).sqrt();
        trusted = (0..n).filter(|&t| !(r[t].abs() > cut)).collect();
        if trusted.is_empty() {
            return Err(Error::AllRowsTrimmed { iterations });
        }
        let next = stlsq(a_mat, &fv, &trusted, lambda, all_columns.clone());
        let step = (&next - &a).norm();
        a = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    let trimmed: Vec<usize> = {
        let mut keep = vec![false; n];
        trusted.iter().for_each(|&t| keep[t] = true);
        (0..n).filter(|&t| !keep[t]).collect()
    };
    let mut s = SparseSolution::new(a_mat, &fv, a, SolverId::Tw)
        .with("lambda", lambda)
        .with("mu", mu)
        .with("tol", tol)
        .with("iterations", iterations)
        .with("trim_rule", "|r_t| > mu * ||r||_2 / sqrt(n_rows)")
        .with("trimmed_rows", trimmed);
    s.converged = converged;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system() -> (BasisMatrix, Vec<f64>) {
        let a = DMatrix::from_fn(60, 8, |i, j| ((i as f64 + 1.0) * (0.21 + 0.13 * j as f64)).sin() + 0.05 * j as f64);
        let truth = DVector::from_vec(vec![0.0, 1.5, 0.0, 0.0, -0.8, 0.0, 0.3, 0.0]);
        let f = &a * &truth;
        (BasisMatrix::from_matrix(a), f.iter().copied().collect())
    }

    #[test]
    fn recovers_noiseless_support() {
        let (phi, f) = system();
        let s = solve_sindy(&phi, &f, 0.1).unwrap();
        assert_eq!(s.support, vec![1, 4, 6]);
        assert!((s.coefficients[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn huge_threshold_empties() {
        let (phi, f) = system();
        let s = solve_sindy(&phi, &f, 1e6).unwrap();
        assert!(s.support.is_empty());
        assert!(s.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn fixed_point() {
        let (phi, f) = system();
        let s = solve_sindy(&phi, &f, 0.5).unwrap();
        let again = stlsq_from_support(&phi, &f, 0.5, &s.support).unwrap();
        assert_eq!(s.coefficients, again.coefficients);
    }

    #[test]
    fn tw_without_trimming_is_sindy() {
        let (phi, mut f) = system();
        f[10] += 0.01;
        let s = solve_sindy(&phi, &f, 0.1).unwrap();
        let t = solve_tw(&phi, &f, 0.1, 1e9, 1e-10).unwrap();
        assert_eq!(s.coefficients, t.coefficients);
        assert_eq!(t.hyperparams["trimmed_rows"], serde_json::json!([]));
    }

    #[test]
    fn tw_trims_an_outlier() {
        let (phi, mut f) = system();
        for t in [5, 17, 33] {
            f[t] += 50.0;
        }
        let t = solve_tw(&phi, &f, 0.1, 1.0, 1e-10).unwrap();
        let trimmed: Vec<usize> = serde_json::from_value(t.hyperparams["trimmed_rows"].clone()).unwrap();
        for row in [5, 17, 33] {
            assert!(trimmed.contains(&row));
        }
        assert_eq!(t.support, vec![1, 4, 6]);
    }
}
