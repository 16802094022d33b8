//! Error measures, incoherence, leverage scores and the exact
//! volume-sampling distribution (a brute-force test oracle).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{CssError, Result};
use crate::linalg::{
    best_rank_error, orthonormal_basis, singular_values, sorted_svd, OrthoBasis, RANK_TOL,
};

/// `‖M - CC†M‖_F`, computed through an orthonormal basis of `span(C)`.
/// An empty selection leaves all of `M`.
pub fn selection_error(m: &DMatrix<f64>, columns: &DMatrix<f64>) -> f64 {
    if columns.ncols() == 0 {
        return m.norm();
    }
    match orthonormal_basis(columns, RANK_TOL) {
        Ok(basis) => basis.residual_matrix(m).norm(),
        Err(_) => m.norm(),
    }
}

/// `‖M - C·X‖_F`.
pub fn reconstruction_error(
    m: &DMatrix<f64>,
    columns: &DMatrix<f64>,
    coefficients: &DMatrix<f64>,
) -> Result<f64> {
    if columns.ncols() != coefficients.nrows()
        || columns.nrows() != m.nrows()
        || coefficients.ncols() != m.ncols()
    {
        return Err(CssError::dim(format!(
            "cannot compare {}x{} with ({}x{})·({}x{})",
            m.nrows(),
            m.ncols(),
            columns.nrows(),
            columns.ncols(),
            coefficients.nrows(),
            coefficients.ncols()
        )));
    }
    Ok((m - columns * coefficients).norm())
}

/// Summary of how well a selection approximates `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub selection_error: f64,
    pub reconstruction_error: Option<f64>,
    /// `‖M - M_k‖_F`.
    pub oracle_error: f64,
    /// `selection_error / oracle_error`; `∞` when the oracle error is zero
    /// but the selection error is not, `1` when both are zero.
    pub relative_ratio: f64,
}

impl ErrorReport {
    pub fn compute(
        m: &DMatrix<f64>,
        columns: &DMatrix<f64>,
        coefficients: Option<&DMatrix<f64>>,
        k: usize,
    ) -> Result<Self> {
        let selection = selection_error(m, columns);
        let reconstruction = coefficients
            .map(|x| reconstruction_error(m, columns, x))
            .transpose()?;
        let oracle = best_rank_error(m, k);
        Ok(ErrorReport {
            selection_error: selection,
            reconstruction_error: reconstruction,
            oracle_error: oracle,
            relative_ratio: relative_ratio(selection, oracle),
        })
    }
}

pub(crate) fn relative_ratio(selection: f64, oracle: f64) -> f64 {
    // exact low-rank inputs: anything within rounding of zero counts as zero
    let tiny = 1e-12;
    if oracle <= tiny {
        if selection <= tiny {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        selection / oracle
    }
}

/// `μ(x) = n1 ‖x‖∞² / ‖x‖²`.
pub fn vector_incoherence(x: &DVector<f64>) -> Result<f64> {
    let norm_sq = x.norm_squared();
    if norm_sq == 0.0 {
        return Err(CssError::param("incoherence of the zero vector is undefined"));
    }
    let peak = x.amax();
    Ok(x.len() as f64 * peak * peak / norm_sq)
}

/// `μ(U) = (n1 / d) max_i ‖Uᵀ e_i‖²` with `d` the basis dimension.
pub fn subspace_incoherence(basis: &OrthoBasis) -> Result<f64> {
    let d = basis.dim();
    if d == 0 {
        return Err(CssError::param("incoherence of the zero subspace is undefined"));
    }
    let max_row = basis
        .matrix()
        .row_iter()
        .map(|r| r.norm_squared())
        .fold(0.0_f64, f64::max);
    Ok(basis.ambient_dim() as f64 / d as f64 * max_row)
}

/// Unnormalised column leverage scores `‖V_kᵀ e_j‖²` of the top-k row space.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    pub scores: Vec<f64>,
    /// `σ_k` and `σ_{k+1}` agree within `1e-12`, so the top-k subspace is
    /// not unique and the scores depend on the SVD realisation.
    pub degenerate_spectrum: bool,
}

pub fn row_leverage_scores(m: &DMatrix<f64>, k: usize) -> Result<LeverageScores> {
    let (_, sigma, v) = sorted_svd(m);
    let cutoff = RANK_TOL * sigma.get(0).copied().unwrap_or(0.0);
    let rank = sigma.iter().take_while(|&&s| s > cutoff && s > 0.0).count();
    if k == 0 || k > rank {
        return Err(CssError::param(format!(
            "k = {k} must lie in [1, rank = {rank}]"
        )));
    }
    let degenerate_spectrum = k < sigma.len() && (sigma[k - 1] - sigma[k]).abs() <= 1e-12;
    let scores = v.columns(0, k).row_iter().map(|r| r.norm_squared()).collect();
    Ok(LeverageScores {
        scores,
        degenerate_spectrum,
    })
}

/// Exact volume-sampling distribution over k-subsets of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeDistribution {
    pub k: usize,
    /// Every k-subset (ascending indices) with its probability, in
    /// lexicographic order.
    pub probs: Vec<(Vec<usize>, f64)>,
}

impl VolumeDistribution {
    pub fn probability(&self, subset: &[usize]) -> f64 {
        let mut key = subset.to_vec();
        key.sort_unstable();
        self.probs
            .binary_search_by(|(s, _)| s.as_slice().cmp(key.as_slice()))
            .map(|i| self.probs[i].1)
            .unwrap_or(0.0)
    }

    /// `E_C[f(C)]` under the distribution.
    pub fn expectation(&self, mut f: impl FnMut(&[usize]) -> f64) -> f64 {
        self.probs.iter().map(|(s, p)| p * f(s)).sum()
    }
}

/// Largest column count accepted by [`volume_sampling_distribution`].
pub const VOLUME_MAX_COLS: usize = 12;
/// Largest subset size accepted by [`volume_sampling_distribution`].
pub const VOLUME_MAX_K: usize = 4;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// `vol(Δ(C))² = det(CᵀC) / (k!)²` for the simplex spanned by the origin and
/// the columns of `C`.
pub fn squared_simplex_volume(columns: &DMatrix<f64>) -> f64 {
    let k = columns.ncols();
    let det = columns.tr_mul(columns).determinant().max(0.0);
    let f = factorial(k);
    det / (f * f)
}

pub fn volume_sampling_distribution(m: &DMatrix<f64>, k: usize) -> Result<VolumeDistribution> {
    let n2 = m.ncols();
    if n2 > VOLUME_MAX_COLS || k > VOLUME_MAX_K {
        return Err(CssError::param(format!(
            "exhaustive volume sampling limited to n2 <= {VOLUME_MAX_COLS} and k <= {VOLUME_MAX_K}, \
             got n2 = {n2}, k = {k}"
        )));
    }
    if k == 0 || k > n2 {
        return Err(CssError::param(format!("k = {k} must lie in [1, {n2}]")));
    }
    let mut probs: Vec<(Vec<usize>, f64)> = (0..n2)
        .combinations(k)
        .map(|subset| {
            let vol = squared_simplex_volume(&m.select_columns(subset.iter()));
            (subset, vol)
        })
        .collect();
    let total: f64 = probs.iter().map(|(_, v)| v).sum();
    if !(total > 0.0) {
        return Err(CssError::degenerate(format!(
            "every {k}-subset spans a degenerate simplex (rank < {k})"
        )));
    }
    for (_, p) in probs.iter_mut() {
        *p /= total;
    }
    Ok(VolumeDistribution { k, probs })
}

/// Rank of `m` at the default relative tolerance.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let s = singular_values(m);
    let cutoff = RANK_TOL * s.get(0).copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > cutoff && v > 0.0).count()
}
