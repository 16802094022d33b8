//! Genotype calls to a sign matrix, split into near rank-one windows with
//! one tag SNP per window.

use active_css::datagen::{parse_genotypes, split_windows};
use active_css::linalg::best_rank_error;
use active_css::metrics::selection_error;
use active_css::{iterative_norm_css, DenseMatrix, IterNormConfig, MatrixOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> active_css::Result<()> {
    // two haplotype blocks of SNPs over 40 individuals
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let individuals = 40;
    let mut text = String::new();
    for block in 0..2 {
        let founders: Vec<bool> = (0..individuals).map(|_| rng.random_bool(0.5)).collect();
        for _ in 0..30 {
            let calls: Vec<&str> = founders
                .iter()
                .map(|&f| match (f ^ rng.random_bool(0.05), block) {
                    (true, 0) => "AA",
                    (false, 0) => "GG",
                    (true, _) => "CC",
                    (false, _) => "TT",
                })
                .collect();
            text.push_str(&calls.join(" "));
            text.push('\n');
        }
    }
    let m = parse_genotypes(&text)?;
    let windows = split_windows(&m, 1, 0.2)?;
    println!("{}x{} sign matrix, windows {windows:?}", m.nrows(), m.ncols());
    for w in windows {
        let block = DenseMatrix::new(m.columns(w.start, w.len()).into_owned())?.normalized()?;
        let mut oracle = MatrixOracle::new(block.clone(), 1);
        let out = iterative_norm_css(&mut oracle, &IterNormConfig::new(1, 20.0))?;
        let picked: Vec<usize> = out.c.indices().iter().map(|i| i + w.start).collect();
        println!(
            "  SNPs {w:?}: tag SNP {picked:?}, error {:.3} (best rank one {:.3})",
            selection_error(&block, out.c.columns()),
            best_rank_error(&block, 1)
        );
    }
    Ok(())
}
