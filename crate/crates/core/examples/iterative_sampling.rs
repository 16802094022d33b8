//! Iterative norm sampling: phase 1 alone, then with the batched second phase.

use active_css::datagen::{generate, SyntheticSpec};
use active_css::linalg::best_rank_error;
use active_css::metrics::selection_error;
use active_css::{iterative_norm_css, IterNormConfig, MatrixOracle};

fn main() -> active_css::Result<()> {
    let k = 6;
    let m = generate(&SyntheticSpec::square(80, k, 0.1, 3))?;
    println!("best rank-{k} error {:.4}", best_rank_error(&m, k));
    let phase1 = IterNormConfig::new(k, 40.0);
    let mut phase2 = phase1.clone().with_phase2(0.5, 0.5);
    phase2.rounds = Some(2);
    phase2.batch_sizes = Some(vec![k, 2 * k]);
    for (name, cfg) in [("phase 1", phase1), ("phase 1 + 2", phase2)] {
        let mut oracle = MatrixOracle::new(m.clone(), 11);
        let out = iterative_norm_css(&mut oracle, &cfg)?;
        println!(
            "{name:<12} {:>3} columns  selection {:.4}  entries {}",
            out.s.len(),
            selection_error(&m, out.s.columns()),
            oracle.total_entries_observed()
        );
    }
    Ok(())
}
