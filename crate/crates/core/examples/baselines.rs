//! Passive baselines on a zero-filled 50% mask: block OMP and a group-lasso path.

use active_css::baselines::{block_omp_css, group_lasso_path, GroupLassoConfig};
use active_css::datagen::{generate, SyntheticSpec};
use active_css::metrics::selection_error;
use active_css::MatrixOracle;

fn main() -> active_css::Result<()> {
    let s = 10;
    let m = generate(&SyntheticSpec::square(40, s, 0.1, 5))?;
    let mut oracle = MatrixOracle::new(m.clone(), 1);
    let mask = oracle.bernoulli_mask(0.5)?;
    let masked = oracle.masked_view(&mask)?;

    let omp = block_omp_css(&masked, &mask, s)?;
    let c = m.select_columns(omp.indices.iter());
    println!("block OMP   {:?}  selection {:.4}", omp.indices, selection_error(&m, &c));

    let path = group_lasso_path(&masked, &GroupLassoConfig::new(0.0).target_s(s))?;
    let chosen = path.chosen_solution();
    let c = m.select_columns(chosen.selected.iter());
    println!(
        "group lasso {:?}  selection {:.4}  lambda {:.3e}  kkt {:.1e}  ({} path points)",
        chosen.selected,
        selection_error(&m, &c),
        chosen.lambda,
        chosen.kkt_residual,
        path.solutions.len()
    );
    Ok(())
}
