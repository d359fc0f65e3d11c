//! Polynomial candidate libraries.
//!
//! Monomials are ordered graded-lexicographically: the constant first, then
//! the degree-one terms in variable order, then degree two
//! (`z1², z1z2, …, z2², …`) and so on. Solution vectors from different runs
//! therefore index the same functions.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeriesSet;
use crate::{Error, Result};

/// A product `z1^e1 · z2^e2 · … · zN^eN`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    pub fn constant(state_dim: usize) -> Self {
        Monomial {
            exponents: vec![0; state_dim],
        }
    }

    /// `z_var` (zero-based variable index).
    pub fn variable(state_dim: usize, var: usize) -> Self {
        let mut exponents = vec![0; state_dim];
        exponents[var] = 1;
        Monomial { exponents }
    }

    /// Product of two monomials over the same variables.
    pub fn times(&self, other: &Monomial) -> Monomial {
        assert_eq!(self.exponents.len(), other.exponents.len());
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn state_dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Evaluates the monomial at one state. This is the single evaluation path
    /// used to fill [`BasisMatrix`], so results are bit-identical.
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.exponents.len());
        let mut acc = 1.0;
        for (&zi, &e) in z.iter().zip(&self.exponents) {
            if e > 0 {
                acc *= zi.powi(e as i32);
            }
        }
        acc
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "z{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// `binomial(n + d, d)`, the number of monomials of degree ≤ d in n variables.
pub fn monomial_count(state_dim: usize, max_degree: u32) -> usize {
    let mut c: u128 = 1;
    for i in 1..=max_degree as u128 {
        c = c * (state_dim as u128 + i) / i;
    }
    c as usize
}

/// All monomials of total degree ≤ `max_degree`, graded-lexicographic.
pub fn enumerate_monomials(state_dim: usize, max_degree: u32) -> Result<Vec<Monomial>> {
    if state_dim == 0 {
        return Err(Error::InvalidArgument("state_dim must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(monomial_count(state_dim, max_degree));
    let mut buf = vec![0u32; state_dim];
    for degree in 0..=max_degree {
        fill_degree(&mut buf, 0, degree, &mut out);
    }
    Ok(out)
}

// Lexicographic within a degree: the first variable's exponent descends.
fn fill_degree(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    if pos == buf.len() - 1 {
        buf[pos] = remaining;
        out.push(Monomial::new(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        fill_degree(buf, pos + 1, remaining - e, out);
    }
    buf[pos] = 0;
}

/// Candidate-function evaluations `Φ` (ℓ samples × K candidates).
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    columns: Vec<Monomial>,
    values: DMatrix<f64>,
    state_dim: usize,
    max_degree: u32,
    column_scale: Option<Vec<f64>>,
}

/// Options for [`build_basis_matrix_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BasisOptions {
    /// Divide every column by its maximum absolute value. Off by default; the
    /// applied factors are kept in [`BasisMatrix::column_scale`].
    pub normalize_columns: bool,
}

impl BasisMatrix {
    /// Wraps explicit values, e.g. for synthetic problems. `columns` must match
    /// `values.ncols()`.
    pub fn from_parts(columns: Vec<Monomial>, values: DMatrix<f64>) -> Result<Self> {
        if columns.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} monomials for {} columns",
                columns.len(),
                values.ncols()
            )));
        }
        let state_dim = columns.first().map_or(0, Monomial::state_dim);
        let max_degree = columns.iter().map(Monomial::degree).max().unwrap_or(0);
        Ok(BasisMatrix {
            columns,
            values,
            state_dim,
            max_degree,
            column_scale: None,
        })
    }

    /// A matrix with anonymous columns (treated as degree-one monomials in
    /// `values.ncols()` variables). Handy for solver tests.
    pub fn from_matrix(values: DMatrix<f64>) -> Self {
        let k = values.ncols();
        let columns = (0..k).map(|j| Monomial::variable(k, j)).collect();
        BasisMatrix {
            columns,
            values,
            state_dim: k,
            max_degree: 1,
            column_scale: None,
        }
    }

    pub fn columns(&self) -> &[Monomial] {
        &self.columns
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_candidates(&self) -> usize {
        self.values.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Per-column divisors applied when built with normalization.
    pub fn column_scale(&self) -> Option<&[f64]> {
        self.column_scale.as_deref()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let n = self.values.nrows();
        &self.values.as_slice()[k * n..(k + 1) * n]
    }

    /// Index of the column holding `m`, if present.
    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.columns.iter().position(|c| c == m)
    }

    /// Restricts to a subset of rows (sample indices).
    pub fn select_rows(&self, rows: &[usize]) -> BasisMatrix {
        BasisMatrix {
            columns: self.columns.clone(),
            values: self.values.select_rows(rows),
            state_dim: self.state_dim,
            max_degree: self.max_degree,
            column_scale: self.column_scale.clone(),
        }
    }
}

/// Evaluates every monomial of degree ≤ `max_degree` on every sample.
pub fn build_basis_matrix(series: &TimeSeriesSet, max_degree: u32) -> Result<BasisMatrix> {
    build_basis_matrix_with(series, max_degree, BasisOptions::default())
}

pub fn build_basis_matrix_with(
    series: &TimeSeriesSet,
    max_degree: u32,
    options: BasisOptions,
) -> Result<BasisMatrix> {
    if series.len() == 0 {
        return Err(Error::InvalidArgument("cannot build a basis from an empty series".into()));
    }
    let n = series.state_dim();
    let columns = enumerate_monomials(n, max_degree)?;
    let mut values = DMatrix::from_fn(series.len(), columns.len(), |t, k| columns[k].evaluate(series.state(t)));
    let column_scale = if options.normalize_columns {
        let mut scales = Vec::with_capacity(columns.len());
        for mut col in values.column_iter_mut() {
            let s = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let s = if s > 0.0 { s } else { 1.0 };
            col /= s;
            scales.push(s);
        }
        Some(scales)
    } else {
        None
    };
    Ok(BasisMatrix {
        columns,
        values,
        state_dim: n,
        max_degree,
        column_scale,
    })
}
