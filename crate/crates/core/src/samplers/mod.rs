//! Active column subset selection algorithms.
//!
//! - [`active_norm_css`]: one-shot norm sampling with estimated column norms.
//! - [`iterative_norm_css`]: adaptive sampling on estimated residual norms,
//!   an approximation of volume sampling, with an optional batched phase and
//!   a subsampled-projector completion of the matrix.
//! - [`approx_leverage_css`]: leverage scores of a uniformly row-subsampled
//!   matrix.

mod iterative;
mod leverage;
mod norm;
mod weights;

use nalgebra::{DMatrix, DVector};

use crate::error::{CssError, Result};
use crate::oracle::MatrixOracle;

pub use iterative::{
    complete_columns, iterative_norm_css, subsampled_residual_norm, Completion, IterNormConfig,
    IterNormOutput, ResidualEstimate,
};
pub use leverage::{approx_leverage_css, LeverageConfig, LeverageOutput};
pub use norm::{active_norm_css, estimate_column_norms, NormConfig, NormOutput};
pub use weights::{Draws, SamplingWeights};

/// Selected column indices together with the materialised columns.
///
/// `columns.column(t)` is column `indices[t]` of the underlying matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSelection {
    indices: Vec<usize>,
    columns: DMatrix<f64>,
}

impl ColumnSelection {
    pub(crate) fn from_parts(indices: Vec<usize>, columns: Vec<DVector<f64>>, n1: usize) -> Self {
        let columns = if columns.is_empty() {
            DMatrix::zeros(n1, 0)
        } else {
            DMatrix::from_columns(&columns)
        };
        ColumnSelection { indices, columns }
    }

    pub fn empty(n1: usize) -> Self {
        ColumnSelection {
            indices: Vec::new(),
            columns: DMatrix::zeros(n1, 0),
        }
    }

    /// Observes each listed column in full through the oracle.
    pub fn observe(oracle: &mut MatrixOracle, indices: Vec<usize>) -> Result<Self> {
        let columns = indices
            .iter()
            .map(|&j| oracle.observe_column(j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(indices, columns, oracle.rows()))
    }

    /// Copies the listed columns out of a fully known matrix. Used for
    /// evaluation only; nothing is charged.
    pub fn from_matrix(m: &DMatrix<f64>, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= m.ncols()) {
            return Err(CssError::param(format!(
                "column index {bad} out of range for {} columns",
                m.ncols()
            )));
        }
        let columns = m.select_columns(indices.iter());
        Ok(ColumnSelection { indices, columns })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Whether every index appears once.
    pub fn is_distinct(&self) -> bool {
        let mut sorted = self.indices.clone();
        sorted.sort_unstable();
        sorted.windows(2).all(|w| w[0] != w[1])
    }

    /// Concatenates two selections, `self` first.
    pub fn concat(&self, other: &ColumnSelection) -> ColumnSelection {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let cols: Vec<DVector<f64>> = self
            .columns
            .column_iter()
            .chain(other.columns.column_iter())
            .map(|c| c.into_owned())
            .collect();
        Self::from_parts(indices, cols, self.columns.nrows())
    }
}

/// Coefficients `X` and the approximation `C·X` they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub coefficients: DMatrix<f64>,
    pub approx: DMatrix<f64>,
}

impl Reconstruction {
    pub(crate) fn new(columns: &DMatrix<f64>, coefficients: DMatrix<f64>) -> Self {
        let approx = columns * &coefficients;
        Reconstruction {
            coefficients,
            approx,
        }
    }
}
