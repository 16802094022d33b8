//! Column-based compression of a grayscale image round-tripped through PGM.

use active_css::datagen::{encode_p5, parse_pgm};
use active_css::metrics::selection_error;
use active_css::{iterative_norm_css, IterNormConfig, MatrixOracle};
use nalgebra::DMatrix;

fn main() -> active_css::Result<()> {
    // smooth synthetic scene: a few separable bumps plus a ramp
    let (h, w) = (96, 128);
    let img = DMatrix::from_fn(h, w, |i, j| {
        let (y, x) = (i as f64 / h as f64, j as f64 / w as f64);
        let bump = |cy: f64, cx: f64, r: f64| (-((y - cy).powi(2) + (x - cx).powi(2)) / r).exp();
        (0.3 * x + 0.5 * bump(0.3, 0.3, 0.02) + 0.4 * bump(0.7, 0.6, 0.05)).clamp(0.0, 1.0)
    });
    let bytes = encode_p5(&img, 255)?;
    let m = parse_pgm(&bytes)?.normalized()?;
    println!("{}x{} PGM, {} bytes", m.nrows(), m.ncols(), bytes.len());
    for k in [2, 5, 10, 20] {
        let mut oracle = MatrixOracle::new(m.clone(), 3);
        let out = iterative_norm_css(&mut oracle, &IterNormConfig::new(k, 0.3 * h as f64))?;
        let frac = oracle.total_entries_observed() as f64 / (h * w) as f64;
        println!(
            "k = {k:>2}  relative error {:.4}  observed {:.0}% of pixels",
            selection_error(&m, out.c.columns()),
            100.0 * frac
        );
    }
    Ok(())
}
