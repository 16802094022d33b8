//! Active norm sampling on a noisy low-rank matrix at several sketch budgets.

use active_css::datagen::{generate, SyntheticSpec};
use active_css::linalg::best_rank_error;
use active_css::{active_norm_css, ErrorReport, MatrixOracle, NormConfig};

fn main() -> active_css::Result<()> {
    let m = generate(&SyntheticSpec::square(100, 8, 0.05, 1))?;
    println!("best rank-8 error {:.4}", best_rank_error(&m, 8));
    println!("{:>5} {:>10} {:>11} {:>9}", "m", "selection", "reconstruct", "entries");
    for budget in [10.0, 25.0, 50.0, 100.0] {
        let mut oracle = MatrixOracle::new(m.clone(), 7);
        let out = active_norm_css(&mut oracle, &NormConfig::new(24, budget, budget))?;
        let report = ErrorReport::compute(&m, out.selection.columns(), Some(&out.reconstruction.coefficients), 8)?;
        println!(
            "{budget:>5} {:>10.4} {:>11.4} {:>9}",
            report.selection_error,
            report.reconstruction_error.unwrap_or(f64::NAN),
            oracle.total_entries_observed()
        );
    }
    Ok(())
}
