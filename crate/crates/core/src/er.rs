//! Entropic Regression.
//!
//! Forward stage: starting from an empty model, repeatedly add the candidate
//! whose inclusion makes the least-squares model output share the most
//! information with the target, conditioned on the current model output.
//! Stop once the best candidate no longer clears a shuffle-test tolerance.
//!
//! Backward stage: for each selected term, measure what the full model
//! knows about the target beyond the model without that term; drop the
//! least informative term while it falls below the tolerance.
//!
//! Information is estimated on scalar sample clouds: row `t` of the model
//! output, the target and the conditioning output form one joint sample.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisMatrix;
use crate::infotheory::{estimate_cmi, shuffle_threshold, ShuffleTestConfig};
use crate::linalg::{lstsq_on_columns, OrthoBasis};
use crate::solvers::{SolverId, SparseSolution};
use crate::{Error, Result};

/// Scores closer than this are treated as equal; the lower index wins.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    /// One threshold from shuffling `I(f; f)`.
    #[default]
    Static,
    /// A fresh threshold for every forward step, from shuffling the
    /// target against the proposed model output given the current one.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErConfig {
    pub knn_k: usize,
    pub tolerance_mode: ToleranceMode,
    /// `alpha` and `n_shuffles` are used as given; the seed of every shuffle
    /// test is derived from [`ErConfig::seed`].
    pub shuffle: ShuffleTestConfig,
    /// Defaults to `min(K, ℓ/2)`.
    pub max_forward_terms: Option<usize>,
    pub seed: u64,
    /// Re-estimate the tolerance in the backward stage instead of reusing
    /// the final forward one.
    pub recompute_backward_tol: bool,
}

impl Default for ErConfig {
    fn default() -> Self {
        ErConfig {
            knn_k: 2,
            tolerance_mode: ToleranceMode::Static,
            shuffle: ShuffleTestConfig::default(),
            max_forward_terms: None,
            seed: 0,
            recompute_backward_tol: false,
        }
    }
}

impl ErConfig {
    fn validate(&self, n_samples: usize, n_candidates: usize) -> Result<()> {
        if self.knn_k == 0 {
            return Err(Error::InvalidArgument("knn_k must be at least 1".into()));
        }
        if n_samples <= self.knn_k {
            return Err(Error::TooShort {
                needed: self.knn_k + 1,
                got: n_samples,
            });
        }
        if let Some(cap) = self.max_forward_terms {
            if cap > n_candidates {
                return Err(Error::InvalidArgument(format!(
                    "max_forward_terms {cap} exceeds the {n_candidates} candidates"
                )));
            }
        }
        self.shuffle.validate()
    }

    fn cap(&self, n_samples: usize, n_candidates: usize) -> usize {
        self.max_forward_terms.unwrap_or(n_candidates.min(n_samples / 2))
    }

    fn shuffle_for(&self, stream: u64) -> ShuffleTestConfig {
        ShuffleTestConfig {
            seed: self.seed.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            ..self.shuffle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardStep {
    pub index: usize,
    pub cmi: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackwardRemoval {
    pub index: usize,
    pub cmi: f64,
}

/// Audit log of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErTrace {
    pub tolerance_mode: ToleranceMode,
    /// Accepted forward selections in order.
    pub forward_steps: Vec<ForwardStep>,
    /// The best candidate of the step that failed the tolerance, if any.
    pub rejected: Option<ForwardStep>,
    /// Tolerance used by the backward stage.
    pub backward_tolerance: Option<f64>,
    pub backward_removals: Vec<BackwardRemoval>,
    pub final_support: Vec<usize>,
}

impl ErTrace {
    pub fn forward_support(&self) -> Vec<usize> {
        self.forward_steps.iter().map(|s| s.index).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least squares on the support columns, zero elsewhere.
pub fn regress_on_support(phi: &BasisMatrix, f: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    let fv = check(phi, f)?;
    if let Some(&bad) = support.iter().find(|&&i| i >= phi.n_candidates()) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range")));
    }
    let mut cols = support.to_vec();
    cols.sort_unstable();
    cols.dedup();
    Ok(lstsq_on_columns(phi.values(), &fv, &cols).iter().copied().collect())
}

fn check(phi: &BasisMatrix, f: &[f64]) -> Result<DVector<f64>> {
    if phi.n_samples() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but the target has {} entries",
            phi.n_samples(),
            f.len()
        )));
    }
    if f.iter().chain(phi.values().iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("inputs contain non-finite values".into()));
    }
    Ok(DVector::from_column_slice(f))
}

/// `I(x; f | z)`, or `I(x; f)` when there is no conditioning output.
fn information(x: &[f64], f: &[f64], z: Option<&[f64]>, k: usize) -> Result<f64> {
    match z {
        Some(z) => estimate_cmi(&[x], &[f], &[z], k),
        None => estimate_cmi(&[x], &[f], &[], k),
    }
}

fn threshold(x: &[f64], f: &[f64], z: Option<&[f64]>, k: usize, cfg: &ShuffleTestConfig) -> Result<f64> {
    match z {
        Some(z) => shuffle_threshold(&[x], &[f], &[z], k, cfg),
        None => shuffle_threshold(&[x], &[f], &[], k, cfg),
    }
}

/// Least-squares model output on the given columns.
fn model_output(phi: &BasisMatrix, f: &[f64], columns: &[usize]) -> Vec<f64> {
    let mut basis = OrthoBasis::new(f.len());
    for &c in columns {
        basis.push(phi.column(c));
    }
    basis.project(f)
}

/// Forward selection. Returns a trace whose `forward_steps` hold the
/// selected support and whose `backward_tolerance` is the tolerance the
/// backward stage should reuse.
pub fn forward_er(phi: &BasisMatrix, f: &[f64], config: &ErConfig) -> Result<ErTrace> {
    check(phi, f)?;
    let (n, k_cand) = (phi.n_samples(), phi.n_candidates());
    config.validate(n, k_cand)?;
    let k = config.knn_k;
    let cap = config.cap(n, k_cand);

    let static_tol = match config.tolerance_mode {
        ToleranceMode::Static => Some(threshold(f, f, None, k, &config.shuffle_for(0))?),
        ToleranceMode::Dynamic => None,
    };

    let mut trace = ErTrace {
        tolerance_mode: config.tolerance_mode,
        ..Default::default()
    };
    let mut selected = vec![false; k_cand];
    let mut basis = OrthoBasis::new(n);
    // Current model output; `None` until the first term is accepted.
    let mut z: Option<Vec<f64>> = None;
    let mut last_tol = static_tol.unwrap_or(f64::NAN);

    while trace.forward_steps.len() < cap {
        let scores: Vec<Option<f64>> = (0..k_cand)
            .into_par_iter()
            .map(|j| -> Result<Option<f64>> {
                if selected[j] {
                    return Ok(None);
                }
                // A column already in the span cannot change the model output.
                let Some(q) = basis.new_direction(phi.column(j)) else {
                    return Ok(None);
                };
                let x = extend_output(z.as_deref(), &q, f);
                information(&x, f, z.as_deref(), k).map(Some)
            })
            .collect::<Result<_>>()?;
        let Some((best, value)) = argmax(&scores) else {
            break;
        };
        let q = basis.new_direction(phi.column(best)).expect("scored candidates are independent");
        let proposal = extend_output(z.as_deref(), &q, f);
        let tol = match static_tol {
            Some(t) => t,
            None => {
                let stream = trace.forward_steps.len() as u64 + 1;
                threshold(&proposal, f, z.as_deref(), k, &config.shuffle_for(stream))?
            }
        };
        last_tol = tol;
        let step = ForwardStep {
            index: best,
            cmi: value,
            tolerance: tol,
        };
        if value > tol {
            trace.forward_steps.push(step);
            selected[best] = true;
            basis.push(phi.column(best));
            z = Some(proposal);
        } else {
            trace.rejected = Some(step);
            break;
        }
    }
    trace.backward_tolerance = Some(last_tol);
    Ok(trace)
}

/// `z + q (qᵀf)`: the projection of `f` after adding direction `q`.
fn extend_output(z: Option<&[f64]>, q: &[f64], f: &[f64]) -> Vec<f64> {
    let c: f64 = q.iter().zip(f).map(|(a, b)| a * b).sum();
    match z {
        Some(z) => z.iter().zip(q).map(|(zi, qi)| zi + c * qi).collect(),
        None => q.iter().map(|qi| c * qi).collect(),
    }
}

fn argmax(scores: &[Option<f64>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, s) in scores.iter().enumerate() {
        if let Some(v) = *s {
            if best.map_or(true, |(_, b)| v > b + TIE_TOL) {
                best = Some((j, v));
            }
        }
    }
    best
}

/// Backward elimination of `forward_support` using tolerance `tol`.
///
/// When `config.recompute_backward_tol` is set, each elimination round
/// re-estimates the tolerance with the configured strategy instead.
pub fn backward_er(
    phi: &BasisMatrix,
    f: &[f64],
    forward_support: &[usize],
    tol: f64,
    config: &ErConfig,
) -> Result<ErTrace> {
    check(phi, f)?;
    config.validate(phi.n_samples(), phi.n_candidates())?;
    if let Some(&bad) = forward_support.iter().find(|&&i| i >= phi.n_candidates()) {
        return Err(Error::InvalidArgument(format!("support index {bad} out of range")));
    }
    let k = config.knn_k;
    let mut trace = ErTrace {
        tolerance_mode: config.tolerance_mode,
        backward_tolerance: Some(tol),
        ..Default::default()
    };
    let mut support: Vec<usize> = forward_support.to_vec();
    let mut round = 0u64;
    while !support.is_empty() {
        round += 1;
        let full = model_output(phi, f, &support);
        let scores: Vec<f64> = (0..support.len())
            .into_par_iter()
            .map(|i| {
                let rest: Vec<usize> = support.iter().enumerate().filter(|&(o, _)| o != i).map(|(_, &c)| c).collect();
                let z = (!rest.is_empty()).then(|| model_output(phi, f, &rest));
                information(&full, f, z.as_deref(), k)
            })
            .collect::<Result<_>>()?;
        let mut worst = 0;
        for (i, &v) in scores.iter().enumerate() {
            if v < scores[worst] - TIE_TOL {
                worst = i;
            }
        }
        let round_tol = if config.recompute_backward_tol {
            let rest: Vec<usize> = support.iter().enumerate().filter(|&(o, _)| o != worst).map(|(_, &c)| c).collect();
            let z = (!rest.is_empty()).then(|| model_output(phi, f, &rest));
            let t = match config.tolerance_mode {
                ToleranceMode::Static => threshold(f, f, None, k, &config.shuffle_for(0))?,
                ToleranceMode::Dynamic => threshold(&full, f, z.as_deref(), k, &config.shuffle_for(1 << 32 | round))?,
            };
            trace.backward_tolerance = Some(t);
            t
        } else {
            tol
        };
        if scores[worst] < round_tol {
            trace.backward_removals.push(BackwardRemoval {
                index: support[worst],
                cmi: scores[worst],
            });
            support.remove(worst);
        } else {
            break;
        }
    }
    support.sort_unstable();
    trace.final_support = support;
    Ok(trace)
}

/// Forward selection, backward elimination and a least-squares fit on the
/// surviving support.
pub fn entropic_regression(phi: &BasisMatrix, f: &[f64], config: &ErConfig) -> Result<(SparseSolution, ErTrace)> {
    let fv = check(phi, f)?;
    let forward = forward_er(phi, f, config)?;
    let tol = forward.backward_tolerance.unwrap_or(f64::NAN);
    let backward = backward_er(phi, f, &forward.forward_support(), tol, config)?;
    let trace = ErTrace {
        tolerance_mode: config.tolerance_mode,
        forward_steps: forward.forward_steps,
        rejected: forward.rejected,
        backward_tolerance: backward.backward_tolerance,
        backward_removals: backward.backward_removals,
        final_support: backward.final_support,
    };
    let a = lstsq_on_columns(phi.values(), &fv, &trace.final_support);
    let solution = SparseSolution::new(phi.values(), &fv, a, SolverId::Er)
        .with("knn_k", config.knn_k)
        .with("tolerance_mode", serde_json::to_value(config.tolerance_mode)?)
        .with("alpha", config.shuffle.alpha)
        .with("n_shuffles", config.shuffle.n_shuffles)
        .with("seed", config.seed);
    Ok((solution, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Uniform};

    fn library(n: usize, k: usize, seed: u64) -> BasisMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(-1.0, 1.0).unwrap();
        BasisMatrix::from_matrix(DMatrix::from_fn(n, k, |_, _| u.sample(&mut rng)))
    }

    fn quick() -> ErConfig {
        ErConfig {
            shuffle: ShuffleTestConfig {
                n_shuffles: 20,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn empty_support_is_zero() {
        let phi = library(50, 4, 1);
        let f: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(regress_on_support(&phi, &f, &[]).unwrap(), vec![0.0; 4]);
        assert!(regress_on_support(&phi, &f, &[9]).is_err());
    }

    #[test]
    fn single_term_target() {
        let phi = library(400, 8, 2);
        let f: Vec<f64> = phi.column(5).iter().map(|v| 2.0 * v).collect();
        let (sol, trace) = entropic_regression(&phi, &f, &quick()).unwrap();
        assert_eq!(trace.forward_support(), vec![5]);
        assert!(trace.rejected.is_some() || trace.forward_steps.len() == 8);
        assert_eq!(sol.support, vec![5]);
        assert!((sol.coefficients[5] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_column_removed_backward() {
        let mut m = library(500, 5, 3).values().clone();
        let dup = m.column(1).clone_owned();
        m.set_column(4, &dup);
        let phi = BasisMatrix::from_matrix(m);
        let f: Vec<f64> = (0..500).map(|t| phi.column(0)[t] - 1.5 * phi.column(1)[t]).collect();
        let cfg = quick();
        let tol = threshold(&f, &f, None, 2, &cfg.shuffle_for(0)).unwrap();
        let trace = backward_er(&phi, &f, &[0, 1, 4], tol, &cfg).unwrap();
        assert_eq!(trace.final_support.len(), 2);
        assert!(trace.final_support.contains(&0));
    }

    #[test]
    fn deterministic_trace() {
        let phi = library(300, 6, 4);
        let f: Vec<f64> = (0..300).map(|t| phi.column(2)[t].powi(3) + 0.3 * phi.column(0)[t]).collect();
        let a = entropic_regression(&phi, &f, &quick()).unwrap();
        let b = entropic_regression(&phi, &f, &quick()).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn trace_serializes() {
        let phi = library(100, 3, 5);
        let f: Vec<f64> = phi.column(0).to_vec();
        let (_, trace) = entropic_regression(&phi, &f, &quick()).unwrap();
        let back: ErTrace = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn invalid_cap() {
        let phi = library(50, 3, 6);
        let f = vec![1.0; 50];
        let cfg = ErConfig {
            max_forward_terms: Some(4),
            ..quick()
        };
        assert!(entropic_regression(&phi, &f, &cfg).is_err());
    }
}
