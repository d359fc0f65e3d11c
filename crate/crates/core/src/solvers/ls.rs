use super::{check_inputs, SolverId, SparseSolution};
use crate::basis::BasisMatrix;
use crate::linalg::lstsq;
use crate::Result;

/// Minimum-norm least squares `a = Φ†f`.
pub fn solve_ls(phi: &BasisMatrix, f: &[f64]) -> Result<SparseSolution> {
    let f = check_inputs(phi, f)?;
    let a = lstsq(phi.values(), &f);
    Ok(SparseSolution::new(phi.values(), &f, a, SolverId::Ls))
}
