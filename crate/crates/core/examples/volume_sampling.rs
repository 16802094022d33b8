//! Compares phase-1 subset frequencies with the exact volume-sampling law.

use std::collections::HashMap;

use active_css::datagen::{generate, SyntheticSpec};
use active_css::metrics::volume_sampling_distribution;
use active_css::{iterative_norm_css, IterNormConfig, MatrixOracle};

fn main() -> active_css::Result<()> {
    let k = 2;
    let m = generate(&SyntheticSpec { n1: 6, n2: 5, k: 0, ..SyntheticSpec::default() })?;
    let law = volume_sampling_distribution(&m, k)?;
    let reps = 20_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut oracle = MatrixOracle::new(m.clone(), 4);
    let cfg = IterNormConfig::new(k, 6.0);
    for _ in 0..reps {
        let mut picked = iterative_norm_css(&mut oracle, &cfg)?.c.indices().to_vec();
        picked.sort_unstable();
        *counts.entry(picked).or_default() += 1;
    }
    println!("{:<8} {:>9} {:>9}", "subset", "volume", "observed");
    for (subset, p) in &law.probs {
        let seen = counts.get(subset).copied().unwrap_or(0) as f64 / reps as f64;
        println!("{:<8} {p:>9.4} {seen:>9.4}", format!("{subset:?}"));
    }
    Ok(())
}
