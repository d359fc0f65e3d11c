//! Declarative benchmark experiments.
//!
//! An [`ExperimentConfig`] names a system, a data budget, a noise model and
//! a list of solvers. [`run_experiment`] simulates `n_runs` independently
//! seeded datasets, solves every equation with every solver, scores the
//! results against the ground truth and aggregates them. Run `r` uses seed
//! `derive_seed(seed, r)`, so any single run can be reproduced in isolation.

mod config;
mod data;
mod report;
mod run;

pub use config::{
    CustomCsvSystem, DoubleWellSystem, ExperimentConfig, KseSystem, LogisticSystem, LorenzSystem, SolverEntry,
    SolverSpec, SystemSpec,
};
pub use data::{boundary_loss, generate_dataset, logistic_topology, Dataset};
pub use report::{emit_report, read_aggregates_csv, read_report_json, ReportFormat, AGGREGATES_HEADER, RUNS_HEADER};
pub use run::{
    aggregate, equation_seed, run_experiment, run_seed, run_solver, score_solution, Aggregate, ExperimentReport, ReportMetadata,
    RunRecord, Score, Timing, TraceRecord,
};

/// SplitMix64 of `seed + stream·φ`: decorrelated child seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
