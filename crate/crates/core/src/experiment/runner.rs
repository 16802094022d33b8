use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::index;
use rayon::prelude::*;

use super::config::{AlgorithmKind, AlgorithmSpec, ExperimentConfig};
use crate::baselines::{block_omp_css, group_lasso_path, GroupLassoConfig};
use crate::error::{CssError, Result};
use crate::linalg::{singular_values, DenseMatrix};
use crate::metrics::{reconstruction_error, selection_error};
use crate::oracle::MatrixOracle;
use crate::samplers::{
    active_norm_css, approx_leverage_css, iterative_norm_css, ColumnSelection, IterNormConfig,
    LeverageConfig, NormConfig,
};

pub const CSV_HEADER: &str =
    "algorithm,alpha,s,k,seed,selection_error,reconstruction_error,oracle_error,entries_observed,status";
pub const SUMMARY_MARKER: &str = "# summary";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

impl TrialStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, TrialStatus::Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub alpha: f64,
    pub s: usize,
    pub k: usize,
    pub seed: u64,
    /// `∞` for failed trials.
    pub selection_error: f64,
    pub reconstruction_error: Option<f64>,
    pub oracle_error: f64,
    pub entries_observed: u64,
    pub status: TrialStatus,
    pub wall_time: Duration,
}

/// Medians over the successful trials of one `(algorithm, α)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub alpha: f64,
    pub s: usize,
    pub k: usize,
    pub selection_error: f64,
    pub reconstruction_error: Option<f64>,
    pub oracle_error: f64,
    pub entries_observed: f64,
    pub succeeded: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Ordered by algorithm arm, then α, then trial.
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

fn fmt_real(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

impl ExperimentReport {
    /// Results table followed by the summary section. Contains no timings,
    /// so identical seeds give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.algorithm,
                r.alpha,
                r.s,
                r.k,
                r.seed,
                fmt_real(r.selection_error),
                fmt_opt(r.reconstruction_error),
                fmt_real(r.oracle_error),
                r.entries_observed,
                if r.status.is_ok() { "ok" } else { "failed" }
            );
        }
        out.push_str(SUMMARY_MARKER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},median,{},{},{},{},ok {}/{}",
                s.algorithm,
                s.alpha,
                s.s,
                s.k,
                fmt_real(s.selection_error),
                fmt_opt(s.reconstruction_error),
                fmt_real(s.oracle_error),
                s.entries_observed,
                s.succeeded,
                s.trials
            );
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("algorithm,alpha,seed,wall_time_s\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6}",
                r.algorithm,
                r.alpha,
                r.seed,
                r.wall_time.as_secs_f64()
            );
        }
        out
    }

    /// Writes the CSV to `path` and the timings to `<path>.timing.csv`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        fs::write(path, self.to_csv())?;
        let timing = timing_path(path);
        fs::write(&timing, self.timing_csv())?;
        Ok(timing)
    }

    pub fn summary_for(&self, algorithm: &str, alpha: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.algorithm == algorithm && s.alpha == alpha)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&ResultRow, &str)> {
        self.rows.iter().filter_map(|r| match &r.status {
            TrialStatus::Failed(msg) => Some((r, msg.as_str())),
            TrialStatus::Ok => None,
        })
    }
}

pub fn timing_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".timing.csv");
    PathBuf::from(name)
}

struct TrialResult {
    selection: ColumnSelection,
    coefficients: Option<nalgebra::DMatrix<f64>>,
}

/// Runs one arm once; the oracle's seed drives every random choice.
fn run_arm(oracle: &mut MatrixOracle, hidden: &DenseMatrix, arm: &AlgorithmSpec, alpha: f64) -> Result<TrialResult> {
    let n1 = hidden.rows();
    let budget = arm.m.unwrap_or(alpha * n1 as f64).max(1.0);
    let k = arm.k();
    let result = match arm.name {
        AlgorithmKind::Norm => {
            let cfg = NormConfig::new(arm.s, budget, budget).with_replacement(arm.with_replacement);
            let out = active_norm_css(oracle, &cfg)?;
            TrialResult {
                coefficients: Some(out.reconstruction.coefficients),
                selection: out.selection,
            }
        }
        AlgorithmKind::IterNorm => {
            let mut cfg = IterNormConfig::new(k, budget);
            if arm.phase2 {
                cfg = cfg.with_phase2(arm.epsilon, arm.delta);
            }
            let out = iterative_norm_css(oracle, &cfg)?;
            TrialResult {
                coefficients: Some(out.reconstruction.coefficients),
                selection: out.s,
            }
        }
        AlgorithmKind::LevScore => {
            let cfg = LeverageConfig::new(k, arm.s, budget).with_replacement(arm.with_replacement);
            let out = approx_leverage_css(oracle, &cfg)?;
            TrialResult {
                selection: out.selection,
                coefficients: None,
            }
        }
        AlgorithmKind::BlockOmp | AlgorithmKind::GroupLasso => {
            let mask = oracle.bernoulli_mask(alpha)?;
            let masked = oracle.masked_view(&mask)?;
            let indices = if arm.name == AlgorithmKind::BlockOmp {
                block_omp_css(&masked, &mask, arm.s)?.indices
            } else {
                let path = group_lasso_path(&masked, &GroupLassoConfig::new(0.0).target_s(arm.s))?;
                path.chosen_solution().selected.clone()
            };
            // selection quality is judged on the true columns; not charged
            TrialResult {
                selection: ColumnSelection::from_matrix(hidden, indices)?,
                coefficients: None,
            }
        }
        AlgorithmKind::Uniform => {
            let n2 = hidden.cols();
            if arm.s > n2 {
                return Err(CssError::param(format!(
                    "cannot pick {} distinct columns out of {n2}",
                    arm.s
                )));
            }
            let picks = index::sample(oracle.rng(), n2, arm.s).into_vec();
            TrialResult {
                selection: ColumnSelection::observe(oracle, picks)?,
                coefficients: None,
            }
        }
    };
    Ok(result)
}

fn tail_energy(sigma: &[f64], k: usize) -> f64 {
    sigma.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

fn run_trial(hidden: &DenseMatrix, sigma: &[f64], arm: &AlgorithmSpec, alpha: f64, seed: u64) -> ResultRow {
    let start = Instant::now();
    let mut oracle = MatrixOracle::new(hidden.clone(), seed);
    let outcome = run_arm(&mut oracle, hidden, arm, alpha);
    let wall_time = start.elapsed();

    let mut row = ResultRow {
        algorithm: arm.label(),
        alpha,
        s: arm.s,
        k: arm.k(),
        seed,
        selection_error: f64::INFINITY,
        reconstruction_error: None,
        oracle_error: tail_energy(sigma, arm.k()),
        entries_observed: oracle.total_entries_observed(),
        status: TrialStatus::Ok,
        wall_time,
    };
    match outcome {
        Ok(result) => {
            row.selection_error = selection_error(hidden, result.selection.columns());
            row.reconstruction_error = result
                .coefficients
                .and_then(|x| reconstruction_error(hidden, result.selection.columns(), &x).ok());
        }
        Err(e) => row.status = TrialStatus::Failed(e.to_string()),
    }
    row
}

fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut summary: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = (&rows[start].algorithm, rows[start].alpha, rows[start].s, rows[start].k);
        let mut end = start;
        while end < rows.len() && (&rows[end].algorithm, rows[end].alpha, rows[end].s, rows[end].k) == key {
            end += 1;
        }
        let cell = &rows[start..end];
        let ok: Vec<&ResultRow> = cell.iter().filter(|r| r.status.is_ok()).collect();
        let pick = |f: &dyn Fn(&ResultRow) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        let recs: Vec<f64> = ok.iter().filter_map(|r| r.reconstruction_error).collect();
        summary.push(SummaryRow {
            algorithm: key.0.clone(),
            alpha: key.1,
            s: key.2,
            k: key.3,
            selection_error: pick(&|r| r.selection_error).unwrap_or(f64::INFINITY),
            reconstruction_error: if recs.len() == ok.len() { median(&recs) } else { None },
            oracle_error: cell[0].oracle_error,
            entries_observed: pick(&|r| r.entries_observed as f64).unwrap_or(0.0),
            succeeded: ok.len(),
            trials: cell.len(),
        });
        start = end;
    }
    summary
}

/// Runs the sweep on an already loaded matrix with up to `jobs` threads.
/// Rows come back in (arm, α, trial) order regardless of scheduling.
pub fn run_on_matrix(config: &ExperimentConfig, hidden: &DenseMatrix, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let sigma: Vec<f64> = singular_values(hidden).iter().copied().collect();
    let arms = config.arms();
    let tasks: Vec<(usize, f64, u64)> = arms
        .iter()
        .enumerate()
        .flat_map(|(a, _)| {
            config.missing_rates.iter().flat_map(move |&alpha| {
                (0..config.trials as u64).map(move |t| (a, alpha, config.seed_base + t))
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CssError::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    let rows: Vec<ResultRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(a, alpha, seed)| run_trial(hidden, &sigma, &arms[a], alpha, seed))
            .collect()
    });
    let summary = summarize(&rows);
    Ok(ExperimentReport { rows, summary })
}

pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let hidden = config.dataset.load()?;
    run_on_matrix(config, &hidden, jobs)
}

/// The sweep with a uniform column-sampling arm added for every `(s, k)`.
pub fn compare_baseline_uniform(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    let mut cfg = config.clone();
    cfg.include_uniform = true;
    run_experiment(&cfg, jobs)
}
