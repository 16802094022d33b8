//! How duplicated high-norm columns affect each sampler.

use active_css::datagen::{generate, SyntheticSpec};
use active_css::experiment::{run_on_matrix, AlgorithmKind, AlgorithmSpec, DatasetSpec, ExperimentConfig};

fn main() -> active_css::Result<()> {
    let base = SyntheticSpec::square(50, 15, 0.1, 2024);
    let arms = [AlgorithmKind::IterNorm, AlgorithmKind::LevScore, AlgorithmKind::Norm, AlgorithmKind::BlockOmp]
        .map(|kind| AlgorithmSpec::new(kind, 15))
        .to_vec();
    let cfg = ExperimentConfig::new(DatasetSpec::Synthetic(base.clone()), arms, vec![0.5]);
    println!("repeated  iter_norm  lev_score       norm  block_omp");
    for repeated in [0, 5, 10, 15] {
        let m = generate(&base.clone().coherent(repeated, 10.0))?;
        let report = run_on_matrix(&cfg, &m, 1)?;
        let medians: Vec<String> = report.summary.iter().map(|s| format!("{:>9.4}", s.selection_error)).collect();
        println!("{repeated:>8}  {}", medians.join("  "));
    }
    Ok(())
}
