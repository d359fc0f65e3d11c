//! Benchmark systems, derivative estimation and observation noise.

mod derivative;
mod double_well;
mod kse;
mod logistic;
mod lorenz;
mod noise;

pub use derivative::{estimate_derivatives, DerivativeScheme};
pub use double_well::{double_well_dataset, double_well_ground_truth, double_well_potential, DoubleWellConfig, DoubleWellData};
pub use kse::{kse_ground_truth, kse_linear_coefficient, simulate_kse_modes, KseParams};
pub use logistic::{logistic_ground_truth, simulate_logistic_network, Adjacency, LogisticParams};
pub use lorenz::{lorenz_ground_truth, simulate_lorenz, simulate_lorenz_sampled, LorenzParams};
pub use noise::{inject_noise, inject_noise_with_mask, NoiseModel};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_monomials, Monomial};
use crate::{Error, Result};

/// Uniformly sampled multivariate trajectory.
///
/// States are stored row-major: `state(t)` is the N-vector at sample `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    times: Vec<f64>,
    states: Vec<f64>,
    state_dim: usize,
    dt: f64,
}

impl TimeSeriesSet {
    /// Builds a series and checks the uniform-spacing invariant.
    pub fn new(times: Vec<f64>, states: Vec<f64>, state_dim: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if state_dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be at least 1".into()));
        }
        if states.len() != times.len() * state_dim {
            return Err(Error::DimensionMismatch(format!(
                "{} state values for {} samples of dimension {}",
                states.len(),
                times.len(),
                state_dim
            )));
        }
        if let Some(&t0) = times.first() {
            for (i, &t) in times.iter().enumerate() {
                let expected = t0 + i as f64 * dt;
                if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sample {i} at t={t} breaks the uniform step {dt}"
                    )));
                }
            }
        }
        Ok(TimeSeriesSet {
            times,
            states,
            state_dim,
            dt,
        })
    }

    /// Rows of equal length, sampled at `0, dt, 2dt, …`.
    pub fn from_rows(rows: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        Self::from_rows_at(rows, 0.0, dt)
    }

    pub fn from_rows_at(rows: Vec<Vec<f64>>, t0: f64, dt: f64) -> Result<Self> {
        let state_dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != state_dim) {
            return Err(Error::DimensionMismatch("rows have different lengths".into()));
        }
        let times = (0..rows.len()).map(|i| t0 + i as f64 * dt).collect();
        let states = rows.into_iter().flatten().collect();
        Self::new(times, states, state_dim, dt)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.state_dim..(t + 1) * self.state_dim]
    }

    /// Raw row-major storage.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub(crate) fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }

    /// Time series of one state variable.
    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.states[t * self.state_dim + i]).collect()
    }

    /// The states as an ℓ×N matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.state_dim, &self.states)
    }

    /// Contiguous sub-range of samples.
    pub fn slice(&self, start: usize, end: usize) -> TimeSeriesSet {
        TimeSeriesSet {
            times: self.times[start..end].to_vec(),
            states: self.states[start * self.state_dim..end * self.state_dim].to_vec(),
            state_dim: self.state_dim,
            dt: self.dt,
        }
    }
}

/// How a trajectory is sampled from the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// Integration step.
    pub dt: f64,
    /// Number of samples returned, including the first.
    pub samples: usize,
    /// Integration steps discarded before the first sample.
    #[serde(default)]
    pub burn_in: usize,
    /// Integration steps between consecutive samples.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl Sampling {
    /// Every integration step is a sample, no burn-in.
    pub fn every_step(dt: f64, samples: usize) -> Self {
        Sampling {
            dt,
            samples,
            burn_in: 0,
            stride: 1,
        }
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.samples < 2 {
            return Err(Error::InvalidArgument("at least two samples are required".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Classical fixed-step fourth-order Runge-Kutta.
pub(crate) fn integrate_rk4<F>(rhs: F, z0: &[f64], sampling: &Sampling, bound: f64) -> Result<TimeSeriesSet>
where
    F: Fn(&[f64], &mut [f64]),
{
    sampling.validate()?;
    let n = z0.len();
    let dt = sampling.dt;
    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut step_count = 0usize;
    let mut step = |z: &mut Vec<f64>, step_count: &mut usize| -> Result<()> {
        rhs(z, &mut k1);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = z[i] + dt * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..n {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        *step_count += 1;
        if z.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::Diverged { step: *step_count });
        }
        Ok(())
    };

    for _ in 0..sampling.burn_in {
        step(&mut z, &mut step_count)?;
    }
    let mut states = Vec::with_capacity(sampling.samples * n);
    states.extend_from_slice(&z);
    for _ in 1..sampling.samples {
        for _ in 0..sampling.stride {
            step(&mut z, &mut step_count)?;
        }
        states.extend_from_slice(&z);
    }
    let t0 = sampling.burn_in as f64 * dt;
    let interval = sampling.sample_interval();
    let times = (0..sampling.samples).map(|i| t0 + i as f64 * interval).collect();
    TimeSeriesSet::new(times, states, n, interval)
}

/// True coefficient matrix of a benchmark system in a polynomial library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    state_dim: usize,
    max_degree: u32,
    /// K×N, column i holds the coefficients of equation i.
    coefficients: DMatrix<f64>,
    support: Vec<Vec<usize>>,
}

impl GroundTruth {
    /// Builds a truth table from `(equation, monomial, value)` entries in the
    /// degree-`max_degree` grlex library over `library_dim` variables.
    /// Zero values are dropped; repeated entries accumulate.
    pub fn from_terms(
        library_dim: usize,
        n_equations: usize,
        max_degree: u32,
        terms: &[(usize, Monomial, f64)],
    ) -> Result<Self> {
        let library = enumerate_monomials(library_dim, max_degree)?;
        let mut coefficients = DMatrix::zeros(library.len(), n_equations);
        for (eq, m, v) in terms {
            if *eq >= n_equations {
                return Err(Error::InvalidArgument(format!("equation index {eq} out of range")));
            }
            let k = library.iter().position(|c| c == m).ok_or_else(|| {
                Error::InvalidArgument(format!("monomial {m} is not in the degree-{max_degree} library"))
            })?;
            coefficients[(k, *eq)] += v;
        }
        Ok(Self::from_matrix(library_dim, max_degree, coefficients))
    }

    pub fn from_matrix(state_dim: usize, max_degree: u32, coefficients: DMatrix<f64>) -> Self {
        let support = coefficients
            .column_iter()
            .map(|c| c.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k).collect())
            .collect();
        GroundTruth {
            state_dim,
            max_degree,
            coefficients,
            support,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn n_equations(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn n_candidates(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Coefficient vector of equation `i`.
    pub fn equation(&self, i: usize) -> Vec<f64> {
        self.coefficients.column(i).iter().copied().collect()
    }

    pub fn support(&self) -> &[Vec<usize>] {
        &self.support
    }

    pub fn nonzero_count(&self) -> usize {
        self.support.iter().map(Vec::len).sum()
    }
}

/// Evaluates a fitted polynomial vector field (K×N coefficients over
/// `library`) at one state.
pub fn evaluate_polynomial_field(library: &[Monomial], coefficients: &DMatrix<f64>, z: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, m) in library.iter().enumerate() {
        let row = coefficients.row(k);
        if row.iter().all(|&c| c == 0.0) {
            continue;
        }
        let v = m.evaluate(z);
        for (o, &c) in out.iter_mut().zip(row.iter()) {
            *o += c * v;
        }
    }
}

/// Integrates a recovered polynomial model with RK4.
pub fn simulate_polynomial_model(
    library: &[Monomial],
    coefficients: &DMatrix<f64>,
    z0: &[f64],
    sampling: &Sampling,
    bound: f64,
) -> Result<TimeSeriesSet> {
    if coefficients.nrows() != library.len() || coefficients.ncols() != z0.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}x{}, library has {} terms and the state {} components",
            coefficients.nrows(),
            coefficients.ncols(),
            library.len(),
            z0.len()
        )));
    }
    integrate_rk4(
        |z, out| evaluate_polynomial_field(library, coefficients, z, out),
        z0,
        sampling,
        bound,
    )
}
