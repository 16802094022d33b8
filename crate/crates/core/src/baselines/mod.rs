//! Passive baselines that work from a zero-filled matrix `W ∘ M` observed
//! through a fixed mask.

mod block_omp;
mod group_lasso;

pub use block_omp::{block_omp_css, BlockOmpOutput};
pub use group_lasso::{
    group_lasso_css, group_lasso_path, lambda_max, GroupLassoConfig, GroupLassoOutput,
    GroupLassoPath, StepRule,
};
