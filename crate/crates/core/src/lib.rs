//! Sparse nonlinear system identification.
//!
//! The central piece is [`er::entropic_regression`]: basis functions are added
//! to a model while they carry conditional mutual information about the target
//! that the current model does not, then pruned again when they turn out to be
//! redundant. Parameters on the selected support are fitted by least squares.
//!
//! Around it sit the pieces needed to use and benchmark it:
//!
//! * [`basis`] builds polynomial candidate libraries.
//! * [`dynamics`] simulates benchmark systems, estimates derivatives and
//!   corrupts data with Gaussian and outlier noise.
//! * [`infotheory`] holds the k-nearest-neighbour (conditional) mutual
//!   information estimators and the shuffle significance test.
//! * [`solvers`] holds the baselines: least squares, orthogonal least squares,
//!   Lasso, basis pursuit denoising, sequential thresholding and trimming.
//! * [`bench`] runs declarative experiments and writes reports.

pub mod basis;
pub mod bench;
pub mod dynamics;
pub mod er;
mod error;
pub mod infotheory;
pub mod io;
pub mod linalg;
pub mod solvers;

pub use error::{Error, Result};
