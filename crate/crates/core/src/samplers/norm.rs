//! Active norm sampling.
//!
//! Column norms are estimated from a Bernoulli subsample of every column,
//! `s` columns are drawn proportionally to the estimates and observed in
//! full, and a sparse unbiased sketch `M̂` is built by sampling each column
//! at a rate proportional to its estimated squared norm. The coefficients
//! are `X = C†M̂`.
//!
//! Randomness is consumed in a fixed order: norm-estimation sets, then
//! selection draws, then approximation sets.

use nalgebra::{DMatrix, DVector};

use super::{ColumnSelection, Reconstruction, SamplingWeights};
use crate::error::{CssError, Result};
use crate::linalg::{pinv_apply, subsample_scale, RANK_TOL};
use crate::oracle::MatrixOracle;

#[derive(Debug, Clone, PartialEq)]
pub struct NormConfig {
    /// Number of columns to select.
    pub s: usize,
    /// Expected samples per column for norm estimation.
    pub m1: f64,
    /// Expected samples per column (on average) for the matrix sketch.
    pub m2: f64,
    pub with_replacement: bool,
}

impl NormConfig {
    /// Without replacement by default.
    pub fn new(s: usize, m1: f64, m2: f64) -> Self {
        NormConfig {
            s,
            m1,
            m2,
            with_replacement: false,
        }
    }

    pub fn with_replacement(mut self, yes: bool) -> Self {
        self.with_replacement = yes;
        self
    }
}

#[derive(Debug, Clone)]
pub struct NormOutput {
    pub selection: ColumnSelection,
    pub reconstruction: Reconstruction,
    /// Estimated squared column norms `ĉ`.
    pub weights: SamplingWeights,
    /// Fewer than `s` columns had positive estimates (without replacement).
    pub exhausted: bool,
}

/// `ĉ_i = (n1 / |Ω_i|) ‖x_{i,Ω_i}‖²` with `Ω_i ~ Bernoulli(m1 / n1)`; an
/// empty `Ω_i` gives `ĉ_i = 0`.
pub fn estimate_column_norms(oracle: &mut MatrixOracle, m1: f64) -> Result<SamplingWeights> {
    if !(m1 >= 1.0) {
        return Err(CssError::param(format!("m1 must be at least 1, got {m1}")));
    }
    let (n1, n2) = (oracle.rows(), oracle.cols());
    let p = (m1 / n1 as f64).min(1.0);
    let mut scores = Vec::with_capacity(n2);
    for j in 0..n2 {
        let omega = oracle.sample_index_set(n1, p)?;
        if omega.is_empty() {
            scores.push(0.0);
            continue;
        }
        let x = oracle.observe_entries(j, &omega)?;
        scores.push(n1 as f64 / omega.len() as f64 * x.norm_squared());
    }
    SamplingWeights::new(scores)
}

pub fn active_norm_css(oracle: &mut MatrixOracle, cfg: &NormConfig) -> Result<NormOutput> {
    let (n1, n2) = (oracle.rows(), oracle.cols());
    if cfg.s == 0 {
        return Err(CssError::param("s must be at least 1"));
    }
    if !cfg.with_replacement && cfg.s > n2 {
        return Err(CssError::param(format!(
            "cannot select {} distinct columns out of {n2}",
            cfg.s
        )));
    }
    if !(cfg.m2 >= 1.0) {
        return Err(CssError::param(format!("m2 must be at least 1, got {}", cfg.m2)));
    }

    let weights = estimate_column_norms(oracle, cfg.m1)?;
    if !(weights.total() > 0.0) {
        return Err(CssError::degenerate("every estimated column norm is zero"));
    }

    let draws = weights.draw_many(cfg.s, cfg.with_replacement, oracle.rng())?;
    let selection = ColumnSelection::observe(oracle, draws.indices)?;

    let n2f = n2 as f64;
    let mut sketch = DMatrix::zeros(n1, n2);
    for (j, &c) in weights.scores().iter().enumerate() {
        let rate = cfg.m2 * n2f * c / weights.total();
        let p = (rate / n1 as f64).min(1.0);
        if p == 0.0 {
            continue;
        }
        let omega = oracle.sample_index_set(n1, p)?;
        if omega.is_empty() {
            continue;
        }
        let values = oracle.observe_entries(j, &omega)?;
        let mut x = DVector::zeros(n1);
        for (v, i) in values.iter().zip(omega.iter()) {
            x[i] = *v;
        }
        sketch.set_column(j, &subsample_scale(&x, &omega)?);
    }

    let coefficients = pinv_apply(selection.columns(), &sketch, RANK_TOL)?;
    let reconstruction = Reconstruction::new(selection.columns(), coefficients);
    Ok(NormOutput {
        selection,
        reconstruction,
        weights,
        exhausted: draws.exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn full_sampling_gives_exact_norms() {
        let m = DenseMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 2.0, 0.0, 1.0])
            .unwrap();
        let mut o = MatrixOracle::new(m, 5);
        let w = estimate_column_norms(&mut o, 3.0).unwrap();
        assert_eq!(w.scores(), &[9.0, 0.0, 5.0]);
        assert_eq!(o.counts().entry_queries, 9);
        assert!(estimate_column_norms(&mut o, 0.5).is_err());
    }

    #[test]
    fn zero_column_estimates_zero_under_subsampling() {
        let m = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        for seed in 0..20 {
            let mut o = MatrixOracle::new(m.clone(), seed);
            let w = estimate_column_norms(&mut o, 1.0).unwrap();
            assert_eq!(w.scores()[1], 0.0);
        }
    }

    #[test]
    fn single_nonzero_column_is_always_selected() {
        let mut data = DMatrix::zeros(4, 5);
        data.set_column(3, &DVector::from_vec(vec![1.0, -2.0, 0.5, 1.0]));
        let m = DenseMatrix::new(data).unwrap();
        for seed in 0..10 {
            let mut o = MatrixOracle::new(m.clone(), seed);
            let out = active_norm_css(&mut o, &NormConfig::new(1, 2.0, 2.0)).unwrap();
            assert_eq!(out.selection.indices(), &[3]);
        }
    }

    #[test]
    fn all_zero_is_degenerate() {
        let m = DenseMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        let mut o = MatrixOracle::new(m, 0);
        let err = active_norm_css(&mut o, &NormConfig::new(1, 3.0, 3.0)).unwrap_err();
        assert!(matches!(err, CssError::Degenerate(_)));
    }

    #[test]
    fn parameter_checks() {
        let m = DenseMatrix::identity(3).unwrap();
        let mut o = MatrixOracle::new(m, 0);
        assert!(active_norm_css(&mut o, &NormConfig::new(0, 3.0, 3.0)).is_err());
        assert!(active_norm_css(&mut o, &NormConfig::new(4, 3.0, 3.0)).is_err());
        assert!(active_norm_css(&mut o, &NormConfig::new(2, 3.0, 0.0)).is_err());
        // more draws than columns is fine with replacement
        let cfg = NormConfig::new(6, 3.0, 3.0).with_replacement(true);
        assert_eq!(active_norm_css(&mut o, &cfg).unwrap().selection.len(), 6);
    }

    #[test]
    fn full_observation_sketch_is_exact() {
        // Equal column norms make every per-column rate m2 = n1, i.e. p = 1.
        let q = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, 2.0, 2.0, 2.0, -1.0, -1.0, 2.0, 2.0],
        ) / 3.0;
        let m = DenseMatrix::new(q.clone()).unwrap();
        let mut o = MatrixOracle::new(m, 2);
        let out = active_norm_css(&mut o, &NormConfig::new(2, 3.0, 3.0)).unwrap();
        let c = out.selection.columns();
        let exact = pinv_apply(c, &q, RANK_TOL).unwrap();
        assert!((&out.reconstruction.coefficients - exact).norm() < 1e-12);
        assert_eq!(o.total_entries_observed(), 9 + 2 * 3 + 9);
    }
}
