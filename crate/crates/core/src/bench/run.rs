use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SolverEntry, SolverSpec, SystemSpec};
use super::data::{generate_with_topology, logistic_topology, Dataset};
use super::derive_seed;
use crate::basis::BasisMatrix;
use crate::dynamics::GroundTruth;
use crate::er::{entropic_regression, ErConfig, ErTrace};
use crate::solvers::{
    solve_cs, solve_cs_cv, solve_lasso, solve_lasso_cv, solve_ls, solve_ols, solve_ols_cv, solve_sindy, solve_tw,
    CrossValidationPlan, SparseSolution,
};
use crate::{Error, Result};

/// Per-dimension ER streams start here so they never collide with the
/// data-generation streams of the same run seed.
const STREAM_ER: u64 = 1 << 32;

/// Seed handed to [`run_solver`] for equation `equation` of a run.
pub fn equation_seed(run_seed: u64, equation: usize) -> u64 {
    derive_seed(run_seed, STREAM_ER + equation as u64)
}

/// Solves `Φa ≈ f` with one configured solver. `seed` feeds ER's shuffle
/// tests and is combined with the configured ER seed.
pub fn run_solver(
    spec: &SolverSpec,
    phi: &BasisMatrix,
    f: &[f64],
    seed: u64,
) -> Result<(SparseSolution, Option<ErTrace>)> {
    let sol = match spec {
        SolverSpec::Ls => solve_ls(phi, f)?,
        SolverSpec::Ols { threshold: Some(t) } => solve_ols(phi, f, *t)?,
        SolverSpec::Ols { threshold: None } => solve_ols_cv(phi, f, &CrossValidationPlan::ols_default())?,
        SolverSpec::Lasso { lambda: Some(l) } => solve_lasso(phi, f, *l)?,
        SolverSpec::Lasso { lambda: None } => solve_lasso_cv(phi, f, None)?,
        SolverSpec::Cs { epsilon: Some(e) } => solve_cs(phi, f, *e)?,
        SolverSpec::Cs { epsilon: None } => solve_cs_cv(phi, f, None)?,
        SolverSpec::Sindy { lambda } => solve_sindy(phi, f, *lambda)?,
        SolverSpec::Tw { lambda, mu, tol } => solve_tw(phi, f, *lambda, *mu, *tol)?,
        SolverSpec::Er(cfg) => {
            let cfg = ErConfig {
                seed: cfg.seed.wrapping_add(seed),
                ..cfg.clone()
            };
            let (sol, trace) = entropic_regression(phi, f, &cfg)?;
            return Ok((sol, Some(trace)));
        }
    };
    Ok((sol, None))
}

/// Structural and parametric comparison against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// `‖a_true − a_est‖₂` over all equations stacked.
    pub parameter_error: f64,
    /// Supports equal in every equation.
    pub exact_recovery: bool,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Scores one solution per equation against `truth`.
pub fn score_solution(truth: &GroundTruth, solutions: &[SparseSolution]) -> Result<Score> {
    if solutions.len() != truth.n_equations() {
        return Err(Error::Config(format!(
            "{} solutions for {} equations",
            solutions.len(),
            truth.n_equations()
        )));
    }
    let mut sq = 0.0;
    let mut exact = true;
    let (mut fp, mut fneg) = (0, 0);
    for (i, sol) in solutions.iter().enumerate() {
        if sol.coefficients.len() != truth.n_candidates() {
            return Err(Error::Config(format!(
                "equation {i}: {} coefficients for a library of {}",
                sol.coefficients.len(),
                truth.n_candidates()
            )));
        }
        let a = truth.equation(i);
        sq += a.iter().zip(&sol.coefficients).map(|(t, e)| (t - e).powi(2)).sum::<f64>();
        let want = &truth.support()[i];
        exact &= *want == sol.support;
        fp += sol.support.iter().filter(|j| !want.contains(j)).count();
        fneg += want.iter().filter(|j| !sol.support.contains(j)).count();
    }
    Ok(Score {
        parameter_error: sq.sqrt(),
        exact_recovery: exact,
        false_positives: fp,
        false_negatives: fneg,
    })
}

/// Outcome of one solver on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub run_seed: u64,
    pub solver: String,
    /// Absent when the solver failed or the system has no ground truth.
    pub score: Option<Score>,
    /// Support per equation.
    pub support_found: Vec<Vec<usize>>,
    pub residual_norms: Vec<f64>,
    /// Every equation's solver reported convergence.
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run: usize,
    pub solver: String,
    pub equation: usize,
    pub trace: ErTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub run: usize,
    pub solver: String,
    pub seconds: f64,
}

/// Statistics over the scored runs of one solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub solver: String,
    pub n_runs: usize,
    pub n_failed: usize,
    pub median_error: Option<f64>,
    pub q1_error: Option<f64>,
    pub q3_error: Option<f64>,
    /// Fraction of all runs (failures count as misses) with exact recovery.
    pub p_exact: Option<f64>,
    pub mean_false_positives: Option<f64>,
    pub mean_false_negatives: Option<f64>,
}

/// Wall-clock data, kept apart so the rest of a report is reproducible.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub generated_unix_seconds: u64,
    pub total_seconds: f64,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Rows generated per run before derivative alignment.
    pub raw_samples: usize,
    /// Rows of the regression problem.
    pub aligned_samples: usize,
    pub n_candidates: usize,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceRecord>,
    pub metadata: ReportMetadata,
}

/// Seed of run `run` under master seed `seed`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(seed, run as u64)
}

struct RunOutput {
    records: Vec<RunRecord>,
    traces: Vec<TraceRecord>,
    timings: Vec<Timing>,
    shape: (usize, usize, usize),
}

/// Runs every configured solver on `n_runs` independently seeded datasets.
///
/// Data-generation failures (e.g. a diverging trajectory) are recorded on
/// every solver of that run; only configuration errors abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let topology = logistic_topology(config)?;
    let outputs: Vec<Result<RunOutput>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| execute_run(config, run, topology.as_ref()))
        .collect();

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut timings = Vec::new();
    let mut shape = None;
    for out in outputs {
        let out = out?;
        if out.shape.0 > 0 {
            shape.get_or_insert(out.shape);
        }
        runs.extend(out.records);
        traces.extend(out.traces);
        timings.extend(out.timings);
    }
    let (raw_samples, aligned_samples, n_candidates) = shape.unwrap_or((0, config.n_samples, 0));
    let aggregates = config
        .solvers
        .iter()
        .map(|s| aggregate(&s.name(), &runs))
        .collect();
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(ExperimentReport {
        config: config.clone(),
        raw_samples,
        aligned_samples,
        n_candidates,
        runs,
        aggregates,
        traces,
        metadata: ReportMetadata {
            generated_unix_seconds: generated,
            total_seconds: started.elapsed().as_secs_f64(),
            timings,
        },
    })
}

fn execute_run(config: &ExperimentConfig, run: usize, topology: Option<&crate::dynamics::Adjacency>) -> Result<RunOutput> {
    let seed = run_seed(config.seed, run);
    let data = match generate_with_topology(config, seed, topology) {
        Ok(d) => d,
        Err(e) if e.is_config() || matches!(config.system, SystemSpec::CustomCsv(_)) => return Err(e),
        Err(e) => {
            let msg = e.to_string();
            let records = config
                .solvers
                .iter()
                .map(|s| failed(run, seed, &s.name(), msg.clone()))
                .collect();
            return Ok(RunOutput {
                records,
                traces: Vec::new(),
                timings: Vec::new(),
                shape: (0, 0, 0),
            });
        }
    };
    let mut out = RunOutput {
        records: Vec::new(),
        traces: Vec::new(),
        timings: Vec::new(),
        shape: (data.raw_samples, data.aligned_samples(), data.phi.n_candidates()),
    };
    for entry in &config.solvers {
        let t0 = Instant::now();
        let (record, tr) = solve_all_equations(entry, &data, run, seed);
        out.timings.push(Timing {
            run,
            solver: entry.name(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out.records.push(record);
        if config.include_traces {
            out.traces.extend(tr);
        }
    }
    Ok(out)
}

fn failed(run: usize, run_seed: u64, solver: &str, error: String) -> RunRecord {
    RunRecord {
        run,
        run_seed,
        solver: solver.to_string(),
        score: None,
        support_found: Vec::new(),
        residual_norms: Vec::new(),
        converged: false,
        error: Some(error),
    }
}

/// Equations are solved independently (in parallel); results are gathered
/// in equation order.
fn solve_all_equations(
    entry: &SolverEntry,
    data: &Dataset,
    run: usize,
    seed: u64,
) -> (RunRecord, Vec<TraceRecord>) {
    let name = entry.name();
    let n_eq = data.targets.ncols();
    let solved: Result<Vec<(SparseSolution, Option<ErTrace>)>> = (0..n_eq)
        .into_par_iter()
        .map(|i| run_solver(&entry.spec, &data.phi, data.target(i), equation_seed(seed, i)))
        .collect();
    let solved = match solved {
        Ok(s) => s,
        Err(e) => return (failed(run, seed, &name, e.to_string()), Vec::new()),
    };
    let (solutions, trace_opts): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let score = match &data.truth {
        Some(t) => match score_solution(t, &solutions) {
            Ok(s) => Some(s),
            Err(e) => return (failed(run, seed, &name, e.to_string()), Vec::new()),
        },
        None => None,
    };
    let traces = trace_opts
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| {
            t.map(|trace| TraceRecord {
                run,
                solver: name.clone(),
                equation: i,
                trace,
            })
        })
        .collect();
    let record = RunRecord {
        run,
        run_seed: seed,
        solver: name,
        score,
        support_found: solutions.iter().map(|s| s.support.clone()).collect(),
        residual_norms: solutions.iter().map(|s| s.residual_norm).collect(),
        converged: solutions.iter().all(|s| s.converged),
        error: None,
    };
    (record, traces)
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Recomputes a solver's aggregate from run records.
pub fn aggregate(solver: &str, runs: &[RunRecord]) -> Aggregate {
    let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.solver == solver).collect();
    let scores: Vec<&Score> = mine.iter().filter_map(|r| r.score.as_ref()).collect();
    let mut errors: Vec<f64> = scores.iter().map(|s| s.parameter_error).collect();
    errors.sort_by(f64::total_cmp);
    let n = mine.len();
    let scored = !scores.is_empty();
    let mean = |f: fn(&Score) -> usize| scored.then(|| scores.iter().map(|s| f(s) as f64).sum::<f64>() / scores.len() as f64);
    Aggregate {
        solver: solver.to_string(),
        n_runs: n,
        n_failed: mine.iter().filter(|r| r.error.is_some()).count(),
        median_error: quantile(&errors, 0.5),
        q1_error: quantile(&errors, 0.25),
        q3_error: quantile(&errors, 0.75),
        p_exact: scored.then(|| scores.iter().filter(|s| s.exact_recovery).count() as f64 / n as f64),
        mean_false_positives: mean(|s| s.false_positives),
        mean_false_negatives: mean(|s| s.false_negatives),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::double_well_ground_truth;
    use crate::solvers::SolverId;
    use std::collections::BTreeMap;

    fn solution(coefficients: Vec<f64>) -> SparseSolution {
        let support = coefficients
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        SparseSolution {
            coefficients,
            support,
            solver: SolverId::Ls,
            hyperparams: BTreeMap::new(),
            residual_norm: 0.0,
            converged: true,
        }
    }

    #[test]
    fn exact_solution_scores_zero() {
        let truth = double_well_ground_truth(4).unwrap();
        let s = score_solution(&truth, &[solution(vec![0.0, 0.0, -1.0, 0.0, 1.0])]).unwrap();
        assert_eq!(s.parameter_error, 0.0);
        assert!(s.exact_recovery);
    }

    #[test]
    fn spurious_term_costs_its_magnitude() {
        let truth = double_well_ground_truth(4).unwrap();
        let s = score_solution(&truth, &[solution(vec![0.1, 0.0, -1.0, 0.0, 1.0])]).unwrap();
        assert!((s.parameter_error - 0.1).abs() < 1e-15);
        assert!(!s.exact_recovery);
        assert_eq!((s.false_positives, s.false_negatives), (1, 0));
    }

    #[test]
    fn mismatched_shapes_are_config_errors() {
        let truth = double_well_ground_truth(4).unwrap();
        assert!(score_solution(&truth, &[]).unwrap_err().is_config());
        assert!(score_solution(&truth, &[solution(vec![1.0; 3])]).unwrap_err().is_config());
    }

    #[test]
    fn quartiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&v, 0.25), Some(1.75));
        assert_eq!(quantile(&[7.0], 0.75), Some(7.0));
        assert_eq!(quantile(&[], 0.5), None);
    }
}
