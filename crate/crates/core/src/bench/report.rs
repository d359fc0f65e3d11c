//! Report files.
//!
//! `json` writes `report.json`: the full [`ExperimentReport`], including
//! the config echo, per-run seeds and (if requested) ER traces.
//!
//! `csv` writes three tables:
//!
//! * `runs.csv`: `run, run_seed, solver, parameter_error, exact_recovery,
//!   false_positives, false_negatives, support_found, residual_norms,
//!   converged, error`. Supports list indices joined by `;` with equations
//!   separated by `|`.
//! * `aggregates.csv`: `solver, n_runs, n_failed, median_error, q1_error,
//!   q3_error, p_exact, mean_false_positives, mean_false_negatives,
//!   raw_samples, aligned_samples`.
//! * `timings.csv`: `run, solver, seconds`.
//!
//! Empty cells mean "not available". Floats use the shortest representation
//! that parses back to the same value.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::{Aggregate, ExperimentReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub const RUNS_HEADER: [&str; 11] = [
    "run",
    "run_seed",
    "solver",
    "parameter_error",
    "exact_recovery",
    "false_positives",
    "false_negatives",
    "support_found",
    "residual_norms",
    "converged",
    "error",
];

pub const AGGREGATES_HEADER: [&str; 11] = [
    "solver",
    "n_runs",
    "n_failed",
    "median_error",
    "q1_error",
    "q3_error",
    "p_exact",
    "mean_false_positives",
    "mean_false_negatives",
    "raw_samples",
    "aligned_samples",
];

/// Writes the report into `dir` (created if missing) and returns the paths
/// written.
pub fn emit_report(report: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let runs = dir.join("runs.csv");
            write_table(&runs, &RUNS_HEADER, report.runs.iter().map(run_row))?;
            let aggs = dir.join("aggregates.csv");
            write_table(
                &aggs,
                &AGGREGATES_HEADER,
                report.aggregates.iter().map(|a| aggregate_row(a, report)),
            )?;
            let timings = dir.join("timings.csv");
            write_table(
                &timings,
                &["run", "solver", "seconds"],
                report
                    .metadata
                    .timings
                    .iter()
                    .map(|t| vec![t.run.to_string(), t.solver.clone(), t.seconds.to_string()]),
            )?;
            Ok(vec![runs, aggs, timings])
        }
    }
}

fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn run_row(r: &super::run::RunRecord) -> Vec<String> {
    let s = r.score.as_ref();
    vec![
        r.run.to_string(),
        r.run_seed.to_string(),
        r.solver.clone(),
        opt(s.map(|s| s.parameter_error)),
        opt(s.map(|s| s.exact_recovery)),
        opt(s.map(|s| s.false_positives)),
        opt(s.map(|s| s.false_negatives)),
        r.support_found.iter().map(|eq| join(eq, ";")).collect::<Vec<_>>().join("|"),
        join(&r.residual_norms, ";"),
        r.converged.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

fn aggregate_row(a: &Aggregate, report: &ExperimentReport) -> Vec<String> {
    vec![
        a.solver.clone(),
        a.n_runs.to_string(),
        a.n_failed.to_string(),
        opt(a.median_error),
        opt(a.q1_error),
        opt(a.q3_error),
        opt(a.p_exact),
        opt(a.mean_false_positives),
        opt(a.mean_false_negatives),
        report.raw_samples.to_string(),
        report.aligned_samples.to_string(),
    ]
}

/// Parses an `aggregates.csv` written by [`emit_report`].
pub fn read_aggregates_csv(path: &Path) -> Result<Vec<Aggregate>> {
    let fmt = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fmt(e.to_string()))?;
    let header = rdr.headers().map_err(|e| fmt(e.to_string()))?.clone();
    if header.iter().ne(AGGREGATES_HEADER) {
        return Err(fmt("unexpected aggregates header".into()));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let f = |i: usize| -> Result<Option<f64>> {
            let cell = &rec[i];
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse().map(Some).map_err(|_| fmt(format!("bad number `{cell}`")))
        };
        let u = |i: usize| -> Result<usize> { rec[i].parse().map_err(|_| fmt(format!("bad count `{}`", &rec[i]))) };
        out.push(Aggregate {
            solver: rec[0].to_string(),
            n_runs: u(1)?,
            n_failed: u(2)?,
            median_error: f(3)?,
            q1_error: f(4)?,
            q3_error: f(5)?,
            p_exact: f(6)?,
            mean_false_positives: f(7)?,
            mean_false_negatives: f(8)?,
        });
    }
    Ok(out)
}

/// Parses a `report.json` written by [`emit_report`].
pub fn read_report_json(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
