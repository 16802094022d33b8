//! Loads a TOML sweep, runs it and prints the median table.

use std::path::PathBuf;

use active_css::experiment::{run_experiment, ExperimentConfig};

fn main() -> active_css::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/sweep.toml"));
    let cfg = ExperimentConfig::from_file(&path)?;
    let report = run_experiment(&cfg, 2)?;
    println!("{:<10} {:>5} {:>12} {:>12}", "algorithm", "alpha", "median", "oracle");
    for s in &report.summary {
        println!("{:<10} {:>5} {:>12.4} {:>12.4}", s.algorithm, s.alpha, s.selection_error, s.oracle_error);
    }
    Ok(())
}
