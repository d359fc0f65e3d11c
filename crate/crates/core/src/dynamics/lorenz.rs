use serde::{Deserialize, Serialize};

use super::{integrate_rk4, GroundTruth, Sampling, TimeSeriesSet};
use crate::basis::Monomial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl LorenzParams {
    pub fn rhs(&self, z: &[f64], out: &mut [f64]) {
        out[0] = self.sigma * (z[1] - z[0]);
        out[1] = z[0] * (self.rho - z[2]) - z[1];
        out[2] = z[0] * z[1] - self.beta * z[2];
    }
}

/// Bound beyond which a Lorenz run is declared blown up.
const LORENZ_BOUND: f64 = 1e6;

/// Lorenz trajectory with `steps` samples spaced by `dt`, starting at `z0`.
pub fn simulate_lorenz(params: &LorenzParams, z0: [f64; 3], dt: f64, steps: usize) -> Result<TimeSeriesSet> {
    simulate_lorenz_sampled(params, z0, &Sampling::every_step(dt, steps))
}

pub fn simulate_lorenz_sampled(params: &LorenzParams, z0: [f64; 3], sampling: &Sampling) -> Result<TimeSeriesSet> {
    integrate_rk4(|z, o| params.rhs(z, o), &z0, sampling, LORENZ_BOUND)
}

/// The seven Lorenz coefficients placed in the degree-`max_degree` library.
pub fn lorenz_ground_truth(params: &LorenzParams, max_degree: u32) -> Result<GroundTruth> {
    if max_degree < 2 {
        return Err(Error::InvalidArgument("the Lorenz field needs a degree-2 library".into()));
    }
    let z = |i| Monomial::variable(3, i);
    let terms = [
        (0, z(0), -params.sigma),
        (0, z(1), params.sigma),
        (1, z(0), params.rho),
        (1, z(1), -1.0),
        (1, z(0).times(&z(2)), -1.0),
        (2, z(2), -params.beta),
        (2, z(0).times(&z(1)), 1.0),
    ];
    GroundTruth::from_terms(3, 3, max_degree, &terms)
}
