//! Column subset selection for matrices that can only be observed through
//! a query-counting oracle.
//!
//! The active samplers in [`samplers`] choose which entries to observe from
//! what they have seen so far:
//!
//! - [`active_norm_css`] draws columns by estimated squared norm;
//! - [`iterative_norm_css`] draws by estimated residual norm, one column at
//!   a time, and completes the matrix in the span of the selection;
//! - [`approx_leverage_css`] draws by leverage scores of a row subsample.
//!
//! [`baselines`] holds the passive comparisons (block OMP and row-sparse
//! group lasso on a zero-filled matrix), [`metrics`] the error measures,
//! and [`experiment`] a seeded sweep harness with CSV output.
//!
//! ```
//! use active_css::{datagen, iterative_norm_css, metrics, IterNormConfig, MatrixOracle};
//!
//! let m = datagen::gen_lowrank_noise(&datagen::SyntheticSpec::square(40, 3, 0.0, 1)).unwrap();
//! let mut oracle = MatrixOracle::new(m.clone(), 7);
//! let out = iterative_norm_css(&mut oracle, &IterNormConfig::new(3, 40.0)).unwrap();
//! assert!(metrics::selection_error(&m, out.s.columns()) < 1e-8);
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod samplers;

pub use error::{CssError, Result};
pub use linalg::{DenseMatrix, IndexSet, OrthoBasis};
pub use metrics::ErrorReport;
pub use oracle::{IndexSampling, MatrixOracle, ObservationMask, QueryCounts};
pub use samplers::{
    active_norm_css, approx_leverage_css, iterative_norm_css, ColumnSelection, IterNormConfig,
    LeverageConfig, NormConfig,
};
