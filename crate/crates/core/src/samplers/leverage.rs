//! Approximate leverage-score sampling.
//!
//! Rows are observed in full with probability `m / n1` each. The top-k
//! right singular vectors of the stacked rows give unnormalised column
//! leverage scores `l̃_j = ‖S_kᵀ e_j‖²`, which sum to `k`; columns are then
//! drawn with probability `l̃_j / k`.

use nalgebra::{DMatrix, DVector};

use super::{ColumnSelection, SamplingWeights};
use crate::error::{CssError, Result};
use crate::linalg::{sorted_svd, RANK_TOL};
use crate::oracle::MatrixOracle;

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageConfig {
    pub k: usize,
    pub s: usize,
    /// Expected number of observed rows.
    pub m: f64,
    pub with_replacement: bool,
}

impl LeverageConfig {
    /// Without replacement by default.
    pub fn new(k: usize, s: usize, m: f64) -> Self {
        LeverageConfig {
            k,
            s,
            m,
            with_replacement: false,
        }
    }

    pub fn with_replacement(mut self, yes: bool) -> Self {
        self.with_replacement = yes;
        self
    }
}

#[derive(Debug, Clone)]
pub struct LeverageOutput {
    pub selection: ColumnSelection,
    /// Estimated unnormalised leverage scores, one per column.
    pub scores: Vec<f64>,
    /// Rank actually used; smaller than `k` when the observed rows span
    /// fewer than `k` dimensions.
    pub effective_k: usize,
    pub rows_observed: usize,
    pub exhausted: bool,
}

impl LeverageOutput {
    pub fn rank_truncated(&self, requested_k: usize) -> bool {
        self.effective_k < requested_k
    }
}

pub fn approx_leverage_css(oracle: &mut MatrixOracle, cfg: &LeverageConfig) -> Result<LeverageOutput> {
    let (n1, n2) = (oracle.rows(), oracle.cols());
    if cfg.k == 0 || cfg.k > n1.min(n2) {
        return Err(CssError::param(format!(
            "k = {} must lie in [1, {}]",
            cfg.k,
            n1.min(n2)
        )));
    }
    if cfg.s == 0 {
        return Err(CssError::param("s must be at least 1"));
    }
    if !cfg.with_replacement && cfg.s > n2 {
        return Err(CssError::param(format!(
            "cannot select {} distinct columns out of {n2}",
            cfg.s
        )));
    }
    if !(cfg.m > 0.0) {
        return Err(CssError::param(format!("m must be positive, got {}", cfg.m)));
    }

    let rows = oracle.sample_index_set(n1, (cfg.m / n1 as f64).min(1.0))?;
    if rows.is_empty() {
        return Err(CssError::degenerate("no rows were observed"));
    }
    let observed: Vec<DVector<f64>> = rows
        .iter()
        .map(|i| oracle.observe_row(i))
        .collect::<Result<_>>()?;
    let stacked = DMatrix::from_columns(&observed).transpose();

    let (_, sigma, v) = sorted_svd(&stacked);
    let cutoff = RANK_TOL * sigma[0];
    let rank = sigma.iter().take_while(|&&s| s > cutoff && s > 0.0).count();
    let effective_k = cfg.k.min(rank);
    if effective_k == 0 {
        return Err(CssError::degenerate("observed rows are all zero"));
    }
    let top = v.columns(0, effective_k);
    let scores: Vec<f64> = top.row_iter().map(|r| r.norm_squared()).collect();

    let weights = SamplingWeights::new(scores.clone())?;
    let draws = weights.draw_many(cfg.s, cfg.with_replacement, oracle.rng())?;
    let selection = ColumnSelection::observe(oracle, draws.indices)?;
    Ok(LeverageOutput {
        selection,
        scores,
        effective_k,
        rows_observed: rows.len(),
        exhausted: draws.exhausted,
    })
}
