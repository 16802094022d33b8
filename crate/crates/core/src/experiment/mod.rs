//! Seeded Monte Carlo sweeps over algorithms and observation rates, with
//! CSV output of per-trial errors and per-cell medians.

mod config;
mod runner;

pub use config::{AlgorithmKind, AlgorithmSpec, DatasetSpec, ExperimentConfig};
pub use runner::{
    compare_baseline_uniform, median, run_experiment, run_on_matrix, timing_path,
    ExperimentReport, ResultRow, SummaryRow, TrialStatus, CSV_HEADER, SUMMARY_MARKER,
};
