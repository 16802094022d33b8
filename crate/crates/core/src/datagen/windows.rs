use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{CssError, Result};
use crate::linalg::best_rank_error;

/// `‖W - W_k‖_F² / ‖W‖_F²`; zero for a zero window.
pub fn rank_residual_ratio(window: &DMatrix<f64>, k: usize) -> f64 {
    let total = window.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    best_rank_error(window, k).powi(2) / total
}

/// Greedy left-to-right split into contiguous column windows.
///
/// A window keeps absorbing the next column while its rank-k residual ratio
/// stays at most `eps`; windows of width `<= k` are never checked, so a
/// single violating column still opens its own window.
pub fn split_windows(m: &DMatrix<f64>, k: usize, eps: f64) -> Result<Vec<Range<usize>>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CssError::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    if k == 0 {
        return Err(CssError::param("k must be at least 1"));
    }
    let n2 = m.ncols();
    let mut windows = Vec::new();
    let mut start = 0;
    while start < n2 {
        let mut end = start + 1;
        while end < n2 {
            let width = end + 1 - start;
            if width > k && rank_residual_ratio(&m.columns(start, width).into_owned(), k) > eps {
                break;
            }
            end += 1;
        }
        windows.push(start..end);
        start = end;
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_gaussian, gen_lowrank_noise, SyntheticSpec};

    #[test]
    fn exact_low_rank_is_one_window() {
        let m = gen_lowrank_noise(&SyntheticSpec::square(30, 3, 0.0, 1)).unwrap();
        assert_eq!(split_windows(&m, 3, 1e-6).unwrap(), vec![0..30]);
    }

    #[test]
    fn tiny_eps_on_full_rank_gives_narrow_windows() {
        let m = gen_gaussian(&SyntheticSpec::square(20, 0, 0.0, 2)).unwrap();
        let w = split_windows(&m, 2, 1e-9).unwrap();
        assert!(w.iter().all(|r| r.len() <= 2));
        assert_eq!(w.iter().map(Range::len).sum::<usize>(), 20);
    }

    #[test]
    fn blockwise_low_rank_boundaries() {
        let widths = [10usize, 7, 12];
        let blocks: Vec<DMatrix<f64>> = widths
            .iter()
            .enumerate()
            .map(|(b, &w)| {
                let spec = SyntheticSpec {
                    n1: 30,
                    n2: w,
                    k: 2,
                    seed: 40 + b as u64,
                    ..SyntheticSpec::default()
                };
                gen_lowrank_noise(&spec).unwrap().into_inner()
            })
            .collect();
        let mut m = DMatrix::zeros(30, widths.iter().sum());
        let mut at = 0;
        for b in &blocks {
            m.columns_mut(at, b.ncols()).copy_from(b);
            at += b.ncols();
        }
        let w = split_windows(&m, 2, 1e-3).unwrap();
        let starts: Vec<usize> = w.iter().map(|r| r.start).collect();
        assert_eq!(starts.len(), 3, "{w:?}");
        for (got, want) in starts.iter().zip([0usize, 10, 17]) {
            assert!(got.abs_diff(want) <= 1, "{w:?}");
        }
        for r in &w {
            if r.len() > 2 {
                assert!(rank_residual_ratio(&m.columns(r.start, r.len()).into_owned(), 2) <= 1e-3);
            }
        }
    }

    #[test]
    fn eps_must_be_a_fraction() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(split_windows(&m, 1, 0.0).is_err());
        assert!(split_windows(&m, 1, 1.0).is_err());
    }
}
