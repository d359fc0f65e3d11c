use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, SystemSpec};
use super::derive_seed;
use crate::basis::{build_basis_matrix, BasisMatrix};
use crate::dynamics::{
    double_well_dataset, double_well_ground_truth, estimate_derivatives, inject_noise, kse_ground_truth,
    logistic_ground_truth, lorenz_ground_truth, simulate_kse_modes, simulate_logistic_network,
    simulate_lorenz_sampled, Adjacency, DerivativeScheme, DoubleWellConfig, GroundTruth, NoiseModel, Sampling,
    TimeSeriesSet,
};
use crate::io::read_csv;
use crate::{Error, Result};

// Seed streams derived from a run seed.
const STREAM_INIT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_TOPOLOGY: u64 = 3;

/// Everything a solver sees for one run, plus the answer key.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Observed (noisy) trajectory before alignment.
    pub observed: TimeSeriesSet,
    /// Observations aligned row by row with the targets.
    pub aligned: TimeSeriesSet,
    /// Candidate library evaluated on `aligned`.
    pub phi: BasisMatrix,
    /// Regression targets, one column per equation.
    pub targets: DMatrix<f64>,
    pub truth: Option<GroundTruth>,
    /// Rows generated before derivative alignment.
    pub raw_samples: usize,
}

impl Dataset {
    pub fn aligned_samples(&self) -> usize {
        self.targets.nrows()
    }

    pub fn target(&self, i: usize) -> &[f64] {
        let n = self.targets.nrows();
        &self.targets.as_slice()[i * n..(i + 1) * n]
    }
}

/// Rows lost at the boundary by a derivative scheme.
pub fn boundary_loss(scheme: DerivativeScheme) -> usize {
    match scheme {
        DerivativeScheme::Central => 2,
        DerivativeScheme::Forward | DerivativeScheme::Map => 1,
    }
}

/// The network shared by every run of a logistic experiment.
pub fn logistic_topology(config: &ExperimentConfig) -> Result<Option<Adjacency>> {
    let SystemSpec::LogisticNet(s) = &config.system else {
        return Ok(None);
    };
    let seed = s.topology_seed.unwrap_or_else(|| derive_seed(config.seed, STREAM_TOPOLOGY));
    let adj = match &s.degrees {
        Some(d) => Adjacency::with_degrees(d, seed)?,
        None => Adjacency::random(s.n_nodes, seed)?,
    };
    Ok(Some(adj))
}

/// Simulates (or loads) one run's data with the given run seed.
pub fn generate_dataset(config: &ExperimentConfig, run_seed: u64) -> Result<Dataset> {
    let topology = logistic_topology(config)?;
    generate_with_topology(config, run_seed, topology.as_ref())
}

pub(crate) fn generate_with_topology(
    config: &ExperimentConfig,
    run_seed: u64,
    topology: Option<&Adjacency>,
) -> Result<Dataset> {
    let noise = NoiseModel {
        seed: derive_seed(run_seed, STREAM_NOISE),
        ..config.noise
    };
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, STREAM_INIT));
    let d = config.basis_degree;

    if let SystemSpec::DoubleWell(s) = &config.system {
        let data = double_well_dataset(&DoubleWellConfig {
            n_samples: config.n_samples,
            lo: s.lo,
            hi: s.hi,
            outlier: s.outlier,
        })?;
        let phi = build_basis_matrix(&data.x, d)?;
        let clean = TimeSeriesSet::from_rows(data.f.iter().map(|&v| vec![v]).collect(), 1.0)?;
        let f = inject_noise(&clean, &noise)?;
        let targets = DMatrix::from_column_slice(f.len(), 1, f.states());
        return Ok(Dataset {
            observed: data.x.clone(),
            aligned: data.x,
            phi,
            targets,
            truth: Some(double_well_ground_truth(d)?),
            raw_samples: config.n_samples,
        });
    }

    let scheme = config.scheme();
    let raw = config.n_samples + boundary_loss(scheme);
    let (clean, truth) = match &config.system {
        SystemSpec::Lorenz(s) => {
            let z0 = s.z0.unwrap_or_else(|| {
                let mut z = [1.0; 3];
                z.iter_mut().for_each(|v| *v += init_rng.random_range(-1.0..=1.0));
                z
            });
            let sampling = Sampling {
                dt: s.dt,
                samples: raw,
                burn_in: s.burn_in,
                stride: s.stride,
            };
            (simulate_lorenz_sampled(&s.params, z0, &sampling)?, lorenz_ground_truth(&s.params, d)?)
        }
        SystemSpec::Kse(s) => {
            let a0: Vec<f64> = (0..s.params.n_modes)
                .map(|_| init_rng.random_range(-1.0..=1.0) * s.init_scale)
                .collect();
            let sampling = Sampling {
                dt: s.dt,
                samples: raw,
                burn_in: s.burn_in,
                stride: s.stride,
            };
            (simulate_kse_modes(&s.params, &a0, &sampling)?, kse_ground_truth(&s.params, d)?)
        }
        SystemSpec::LogisticNet(s) => {
            let adj = topology.ok_or_else(|| Error::Config("logistic_net needs a topology".into()))?;
            let x0: Vec<f64> = (0..s.n_nodes).map(|_| init_rng.random_range(0.05..0.95)).collect();
            let full = simulate_logistic_network(&s.params, adj, &x0, s.burn_in + raw, 0.5)?;
            (full.slice(s.burn_in, s.burn_in + raw), logistic_ground_truth(&s.params, adj, d)?)
        }
        SystemSpec::CustomCsv(c) => {
            let series = read_csv(&c.path)?;
            if series.len() < raw {
                return Err(Error::Config(format!(
                    "{} has {} rows, {raw} needed for {} aligned samples",
                    c.path.display(),
                    series.len(),
                    config.n_samples
                )));
            }
            let truth = match &c.truth {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    let t: GroundTruth = serde_json::from_str(&text)?;
                    if t.max_degree() != d || t.state_dim() != series.state_dim() {
                        return Err(Error::Config(format!(
                            "{}: truth is for degree {} over {} variables",
                            p.display(),
                            t.max_degree(),
                            t.state_dim()
                        )));
                    }
                    Some(t)
                }
                None => None,
            };
            let series = series.slice(0, raw);
            let observed = inject_noise(&series, &noise)?;
            let (targets, aligned) = estimate_derivatives(&observed, scheme)?;
            let phi = build_basis_matrix(&aligned, d)?;
            return Ok(Dataset {
                observed,
                aligned,
                phi,
                targets,
                truth,
                raw_samples: raw,
            });
        }
        SystemSpec::DoubleWell(_) => unreachable!(),
    };
    let observed = inject_noise(&clean, &noise)?;
    let (targets, aligned) = estimate_derivatives(&observed, scheme)?;
    let phi = build_basis_matrix(&aligned, d)?;
    Ok(Dataset {
        observed,
        aligned,
        phi,
        targets,
        truth: Some(truth),
        raw_samples: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::{LorenzSystem, SolverEntry, SolverSpec};

    fn lorenz(n: usize) -> ExperimentConfig {
        ExperimentConfig {
            system: SystemSpec::Lorenz(LorenzSystem {
                burn_in: 100,
                ..Default::default()
            }),
            basis_degree: 2,
            n_samples: n,
            noise: NoiseModel::none(),
            derivative: None,
            solvers: vec![SolverEntry::new(SolverSpec::Ls)],
            n_runs: 1,
            seed: 0,
            include_traces: false,
        }
    }

    #[test]
    fn aligned_rows_match_request() {
        let ds = generate_dataset(&lorenz(50), 3).unwrap();
        assert_eq!(ds.aligned_samples(), 50);
        assert_eq!(ds.raw_samples, 52);
        assert_eq!(ds.phi.n_samples(), 50);
        assert_eq!(ds.phi.n_candidates(), 10);
        assert_eq!(ds.truth.unwrap().nonzero_count(), 7);
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_dataset(&lorenz(30), 11).unwrap();
        let b = generate_dataset(&lorenz(30), 11).unwrap();
        let c = generate_dataset(&lorenz(30), 12).unwrap();
        assert_eq!(a.targets, b.targets);
        assert_ne!(a.targets, c.targets);
    }

    #[test]
    fn double_well_targets_carry_the_outlier() {
        let cfg = ExperimentConfig {
            system: SystemSpec::DoubleWell(Default::default()),
            basis_degree: 10,
            n_samples: 61,
            ..lorenz(0)
        };
        let ds = generate_dataset(&cfg, 0).unwrap();
        assert_eq!(ds.phi.n_candidates(), 11);
        assert_eq!(ds.target(0)[43], 0.5);
    }
}
