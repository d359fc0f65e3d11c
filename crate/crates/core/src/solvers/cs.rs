//! Basis pursuit denoising, `min ‖a‖₁ s.t. ‖Φa − f‖₂ ≤ ε`, by ADMM on the
//! split `a = y` with an exact projection onto the constraint set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{argmin_first, check_inputs, cv_scores, CrossValidationPlan, SolverId, SparseSolution};
use crate::basis::BasisMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsOptions {
    /// Primal residual `‖a − y‖` target (absolute, per √K).
    pub feasibility_tol: f64,
    /// Dual residual target (relative).
    pub stationarity_tol: f64,
    pub max_iterations: usize,
}

impl Default for CsOptions {
    fn default() -> Self {
        CsOptions {
            feasibility_tol: 1e-9,
            stationarity_tol: 1e-8,
            max_iterations: 100_000,
        }
    }
}

/// Euclidean projection onto `{x : ‖Φx − f‖₂ ≤ ε}` through the SVD of `Φ`.
struct Projector {
    /// Right singular vectors (K × r) and singular values of the kept modes.
    v: DMatrix<f64>,
    sigma: Vec<f64>,
    /// `Uᵀf`
    g: Vec<f64>,
    /// Squared norm of the part of `f` outside the column space.
    f_perp2: f64,
    f_norm2: f64,
    eps: f64,
}

impl Projector {
    fn new(phi: &DMatrix<f64>, f: &DVector<f64>, eps: f64) -> Self {
        let svd = phi.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        let tol = smax * phi.nrows().max(phi.ncols()) as f64 * f64::EPSILON;
        let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > tol).collect();
        let v = DMatrix::from_fn(phi.ncols(), keep.len(), |r, c| v_t[(keep[c], r)]);
        let sigma: Vec<f64> = keep.iter().map(|&i| s[i]).collect();
        let g: Vec<f64> = keep.iter().map(|&i| u.column(i).dot(f)).collect();
        let f_perp2 = (f.norm_squared() - g.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        Projector {
            v,
            sigma,
            g,
            f_perp2,
            f_norm2: f.norm_squared(),
            eps,
        }
    }

    /// True when no point satisfies the constraint.
    fn infeasible(&self) -> bool {
        self.f_perp2 - self.eps * self.eps > 1e-12 * self.f_norm2
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let coords = self.v.tr_mul(x);
        let w: Vec<f64> = (0..self.sigma.len())
            .map(|i| self.sigma[i] * coords[i] - self.g[i])
            .collect();
        let w2: f64 = w.iter().map(|x| x * x).sum();
        let target = self.eps * self.eps - self.f_perp2;
        if w2 <= target {
            return x.clone();
        }
        let shift: Vec<f64> = if target <= 0.0 {
            // The constraint set is (at most) the least-squares affine set.
            (0..w.len()).map(|i| -w[i] / self.sigma[i]).collect()
        } else {
            let mu = self.multiplier(&w, target);
            (0..w.len())
                .map(|i| -mu * self.sigma[i] * w[i] / (1.0 + mu * self.sigma[i] * self.sigma[i]))
                .collect()
        };
        x + &self.v * DVector::from_vec(shift)
    }

    /// Solves `Σ w_i² / (1 + μσ_i²)² = target` for `μ > 0`.
    fn multiplier(&self, w: &[f64], target: f64) -> f64 {
        let h = |mu: f64| -> f64 {
            w.iter()
                .zip(&self.sigma)
                .map(|(wi, s)| {
                    let d = 1.0 + mu * s * s;
                    wi * wi / (d * d)
                })
                .sum::<f64>()
                - target
        };
        let mut lo = 0.0;
        let mut hi = 1.0 / self.sigma.iter().map(|s| s * s).fold(f64::INFINITY, f64::min).max(f64::MIN_POSITIVE);
        while h(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return lo;
            }
        }
        // Bisection in log space is robust across the wide range of μ.
        for _ in 0..200 {
            let mid = if lo == 0.0 { hi * 0.5 } else { (lo * hi).sqrt() };
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }
}

fn shrink(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| {
        if x > t {
            x - t
        } else if x < -t {
            x + t
        } else {
            0.0
        }
    })
}

/// Returns the sparse iterate, and whether ADMM converged and the problem
/// was feasible.
fn cs_fit(phi: &DMatrix<f64>, f: &DVector<f64>, eps: f64, opts: &CsOptions) -> (DVector<f64>, bool, bool) {
    let k = phi.ncols();
    if f.norm() <= eps {
        return (DVector::zeros(k), true, true);
    }
    let proj = Projector::new(phi, f, eps);
    let feasible = !proj.infeasible();
    let root_k = (k as f64).sqrt();
    let mut rho = 1.0;
    let mut y = DVector::zeros(k);
    let mut u = DVector::zeros(k);
    let mut x = proj.project(&y);
    let scale = x.amax().max(1.0);
    for _ in 0..opts.max_iterations {
        x = proj.project(&(&y - &u));
        let y_prev = y;
        y = shrink(&(&x + &u), 1.0 / rho);
        u += &x - &y;
        let primal = (&x - &y).norm();
        let dual = rho * (&y - &y_prev).norm();
        let p_tol = opts.feasibility_tol * root_k * scale;
        let d_tol = opts.stationarity_tol * (root_k + rho * u.norm());
        if primal <= p_tol && dual <= d_tol {
            return (y, true, feasible);
        }
        // Residual balancing.
        if primal > 10.0 * dual {
            rho *= 2.0;
            u /= 2.0;
        } else if dual > 10.0 * primal {
            rho /= 2.0;
            u *= 2.0;
        }
    }
    (y, false, feasible)
}

pub fn solve_cs(phi: &BasisMatrix, f: &[f64], epsilon: f64) -> Result<SparseSolution> {
    solve_cs_with(phi, f, epsilon, &CsOptions::default())
}

pub fn solve_cs_with(phi: &BasisMatrix, f: &[f64], epsilon: f64, opts: &CsOptions) -> Result<SparseSolution> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let fv = check_inputs(phi, f)?;
    let (a, converged, feasible) = cs_fit(phi.values(), &fv, epsilon, opts);
    let mut s = SparseSolution::new(phi.values(), &fv, a, SolverId::Cs).with("epsilon", epsilon);
    s.converged = converged && feasible;
    if !feasible {
        s.hyperparams.insert("infeasible".into(), true.into());
    }
    Ok(s)
}

/// Cross-validates `ε = g·‖f‖₂` over the relative values `g` in the plan's
/// grid ([`CrossValidationPlan::cs_default`] if none is given).
pub fn solve_cs_cv(phi: &BasisMatrix, f: &[f64], plan: Option<&CrossValidationPlan>) -> Result<SparseSolution> {
    let fv = check_inputs(phi, f)?;
    let plan = plan.cloned().unwrap_or_else(CrossValidationPlan::cs_default);
    plan.validate(fv.len())?;
    let opts = CsOptions::default();
    let scores = cv_scores(phi.values(), &fv, &plan, |p, y| {
        let norm = y.norm();
        plan.grid.iter().map(|&g| cs_fit(p, y, g * norm, &opts).0).collect()
    });
    let best = argmin_first(&scores);
    let eps = plan.grid[best] * fv.norm();
    let mut s = solve_cs_with(phi, f, eps, &opts)?;
    s.hyperparams.insert("cv_relative_grid".into(), plan.grid.clone().into());
    s.hyperparams.insert("cv_scores".into(), scores.into());
    s.hyperparams.insert("n_folds".into(), plan.n_folds.into());
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn over_sparse_toy() {
        let phi = BasisMatrix::from_matrix(DMatrix::from_row_slice(2, 3, &[6.0, 3.0, 2.0, 2.0, 1.0, 1.0]));
        let s = solve_cs(&phi, &[6.0, 2.0], 1e-9).unwrap();
        assert!(s.converged);
        let expect = [1.0, 0.0, 0.0];
        for (a, e) in s.coefficients.iter().zip(expect) {
            assert!((a - e).abs() < 1e-3, "{:?}", s.coefficients);
        }
    }

    #[test]
    fn loose_tolerance_gives_zero() {
        let phi = BasisMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let s = solve_cs(&phi, &[3.0, 4.0], 5.0).unwrap();
        assert!(s.support.is_empty());
    }

    #[test]
    fn exact_sparse_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(40, 100, |_, _| StandardNormal.sample(&mut rng));
        let mut truth = DVector::zeros(100);
        truth[7] = 1.5;
        truth[42] = -2.0;
        truth[91] = 0.7;
        let f = &a * &truth;
        let s = solve_cs(&BasisMatrix::from_matrix(a), f.as_slice(), 0.0).unwrap();
        for i in 0..100 {
            assert!((s.coefficients[i] - truth[i]).abs() < 1e-6, "{i}: {}", s.coefficients[i]);
        }
    }

    #[test]
    fn projection_lands_on_boundary() {
        let a = DMatrix::from_fn(6, 3, |i, j| ((i + 2 * j) as f64).sin());
        let f = DVector::from_fn(6, |i, _| i as f64);
        let p = Projector::new(&a, &f, 2.5);
        let x = p.project(&DVector::from_vec(vec![10.0, -4.0, 3.0]));
        let r = (&a * &x - &f).norm();
        assert!(r <= 2.5_f64.max(p.f_perp2.sqrt()) + 1e-8);
    }
}
