//! Dense least-squares helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `a x ≈ b`.
///
/// Tall systems are first reduced with a Householder QR, then the pseudoinverse
/// is applied through an SVD of the triangular factor. Singular values below
/// `σ_max · max(m, n) · ε` are treated as zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "lstsq: row count mismatch");
    if n == 0 {
        return DVector::zeros(0);
    }
    if m == 0 {
        return DVector::zeros(n);
    }
    if m >= 2 * n {
        let qr = a.clone().qr();
        let qtb = qr.q().tr_mul(b);
        let r = qr.r();
        pinv_apply(r, &qtb, m.max(n))
    } else {
        pinv_apply(a.clone(), b, m.max(n))
    }
}

fn pinv_apply(a: DMatrix<f64>, b: &DVector<f64>, size: usize) -> DVector<f64> {
    let svd = a.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let tol = s_max * size as f64 * f64::EPSILON;
    let mut x = DVector::zeros(v_t.ncols());
    for i in 0..s.len() {
        if s[i] > tol {
            let coef = u.column(i).dot(b) / s[i];
            x.axpy(coef, &v_t.row(i).transpose(), 1.0);
        }
    }
    x
}

/// Least squares restricted to `columns` of `a`; entries outside the column
/// set are zero in the returned length-`a.ncols()` vector.
pub fn lstsq_on_columns(a: &DMatrix<f64>, b: &DVector<f64>, columns: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(a.ncols());
    if columns.is_empty() {
        return out;
    }
    let sub = a.select_columns(columns);
    let x = lstsq(&sub, b);
    for (slot, &c) in columns.iter().enumerate() {
        out[c] = x[slot];
    }
    out
}

/// Least squares restricted to a subset of rows and columns.
pub fn lstsq_on_rows_columns(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rows: &[usize],
    columns: &[usize],
) -> DVector<f64> {
    let mut out = DVector::zeros(a.ncols());
    if columns.is_empty() || rows.is_empty() {
        return out;
    }
    let sub = a.select_rows(rows).select_columns(columns);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|&r| b[r]));
    let x = lstsq(&sub, &rhs);
    for (slot, &c) in columns.iter().enumerate() {
        out[c] = x[slot];
    }
    out
}

/// `‖a x − b‖₂`.
pub fn residual_norm(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).norm()
}

/// Orthonormal basis grown one column at a time.
///
/// Used to evaluate `Φ_S Φ_S† f` for many candidate supports `S ∪ {j}` without
/// refactoring: the projection onto the enlarged span is the current projection
/// plus the component of `f` along the new orthonormal direction.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    len: usize,
    q: Vec<Vec<f64>>,
}

/// Relative norm below which a column counts as lying in the current span.
const DEPENDENCE_TOL: f64 = 1e-10;

impl OrthoBasis {
    pub fn new(len: usize) -> Self {
        OrthoBasis { len, q: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Unit vector along the part of `v` orthogonal to the current span, or
    /// `None` when `v` is numerically inside the span.
    pub fn new_direction(&self, v: &[f64]) -> Option<Vec<f64>> {
        debug_assert_eq!(v.len(), self.len);
        let norm0 = dot(v, v).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return None;
        }
        let mut w = v.to_vec();
        // Two passes of modified Gram-Schmidt keep the basis orthogonal to
        // working precision even for nearly collinear libraries.
        for _ in 0..2 {
            for q in &self.q {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm <= DEPENDENCE_TOL * norm0 {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        Some(w)
    }

    /// Appends `v`'s new direction; returns false if `v` was dependent.
    pub fn push(&mut self, v: &[f64]) -> bool {
        match self.new_direction(v) {
            Some(d) => {
                self.q.push(d);
                true
            }
            None => false,
        }
    }

    /// Orthogonal projection of `f` onto the span.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for q in &self.q {
            axpy(dot(q, f), q, &mut out);
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
