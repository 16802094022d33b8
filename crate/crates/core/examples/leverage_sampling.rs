//! Approximate leverage-score sampling from a random subset of rows.

use active_css::datagen::{generate, SyntheticSpec};
use active_css::linalg::best_rank_error;
use active_css::metrics::{row_leverage_scores, selection_error};
use active_css::{approx_leverage_css, LeverageConfig, MatrixOracle};

fn main() -> active_css::Result<()> {
    let (k, s) = (5, 20);
    let m = generate(&SyntheticSpec::square(60, 0, 0.0, 9))?;
    let exact = row_leverage_scores(&m.transpose(), k)?;
    let mut oracle = MatrixOracle::new(m.clone(), 2);
    let out = approx_leverage_css(&mut oracle, &LeverageConfig::new(k, s, 30.0))?;
    let total: f64 = out.scores.iter().sum();
    let gap = out
        .scores
        .iter()
        .zip(&exact.scores)
        .map(|(a, e)| (a / total - e / k as f64).abs())
        .sum::<f64>();
    println!("rows observed {} of {}, effective k {}", out.rows_observed, m.nrows(), out.effective_k);
    println!("total variation to exact scores {:.3}", 0.5 * gap);
    println!(
        "selection error {:.4} vs best rank-{k} {:.4}",
        selection_error(&m, out.selection.columns()),
        best_rank_error(&m, k)
    );
    Ok(())
}
