use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use active_css::baselines::{block_omp_css, group_lasso_css, lambda_max, GroupLassoConfig};
use active_css::linalg::{best_rank_error, subsample_scale};
use active_css::metrics::selection_error;
use active_css::samplers::estimate_column_norms;
use active_css::{
    iterative_norm_css, DenseMatrix, IndexSampling, IterNormConfig, MatrixOracle, ObservationMask,
};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn shaped() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..9, 2usize..9).prop_flat_map(|(r, c)| matrix(r, c))
}

fn gram_kkt(y: &DMatrix<f64>, x: &DMatrix<f64>, lambda: f64) -> f64 {
    // gradient of ‖Y − YX‖² restricted to the off-diagonal coordinates
    let g = (y.transpose() * (y * x - y)) * 2.0;
    let n = x.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let row: Vec<(f64, f64)> = (0..n).filter(|&j| j != i).map(|j| (g[(i, j)], x[(i, j)])).collect();
        let norm = row.iter().map(|(_, xv)| xv * xv).sum::<f64>().sqrt();
        let gnorm = row.iter().map(|(gv, _)| gv * gv).sum::<f64>().sqrt();
        let r = if norm > 0.0 {
            row.iter()
                .map(|(gv, xv)| (gv + lambda * xv / norm).powi(2))
                .sum::<f64>()
                .sqrt()
        } else {
            (gnorm - lambda).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn selection_error_dominates_best_rank(m in shaped(), picks in prop::collection::vec(0usize..64, 1..6)) {
        let cols: Vec<usize> = picks.iter().map(|p| p % m.ncols()).collect();
        let c = m.select_columns(cols.iter());
        let k = cols.len().min(m.nrows()).min(m.ncols());
        let err = selection_error(&m, &c);
        prop_assert!(err >= best_rank_error(&m, k) - 1e-10);
        prop_assert!(err <= m.norm() + 1e-12);
    }

    #[test]
    fn block_omp_residuals_nonincreasing(m in shaped(), seed in any::<u64>(), s in 1usize..5) {
        let mask = ObservationMask::from_fn(m.nrows(), m.ncols(), |i, j| !(i * 7 + j * 3 + seed as usize).is_multiple_of(4));
        let masked = mask.apply(&m);
        prop_assume!(masked.norm() > 1e-6);
        let s = s.min(m.ncols());
        let out = block_omp_css(&masked, &mask, s).unwrap();
        prop_assert_eq!(out.indices.len(), s);
        let mut distinct = out.indices.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), s);
        for w in out.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn group_lasso_satisfies_kkt(y in matrix(6, 5), frac in 0.05..0.9f64) {
        let lmax = lambda_max(&y);
        prop_assume!(lmax > 1e-6);
        let out = group_lasso_css(&y, &GroupLassoConfig::new(frac * lmax)).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.coefficients.diagonal().iter().all(|&d| d == 0.0));
        prop_assert!(gram_kkt(&y, &out.coefficients, out.lambda) <= 1e-6);
        for w in out.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn iterative_sampling_is_exact_on_low_rank(seed in any::<u64>(), k in 1usize..4) {
        let b = DMatrix::from_fn(12, k, |i, j| (((i * 31 + j * 17) as u64 ^ seed) % 97) as f64 / 97.0 - 0.5);
        let w = DMatrix::from_fn(k, 10, |i, j| (((i * 13 + j * 29) as u64 ^ seed.rotate_left(7)) % 89) as f64 / 89.0 - 0.5);
        let m = &b * &w;
        prop_assume!(best_rank_error(&m, k - 1) > 1e-3 && best_rank_error(&m, k) < 1e-12);
        let mut oracle = MatrixOracle::new(DenseMatrix::new(m.clone()).unwrap(), seed);
        let out = iterative_norm_css(&mut oracle, &IterNormConfig::new(k, 12.0)).unwrap();
        prop_assert!(selection_error(&m, out.c.columns()) < 1e-8 * m.norm().max(1.0));
    }
}

#[test]
fn subsample_scale_is_unbiased() {
    let x = DVector::from_fn(20, |i, _| ((i * 7) % 5) as f64 - 1.5);
    let mut oracle = MatrixOracle::new(DenseMatrix::identity(20).unwrap(), 5).with_sampling(IndexSampling::FixedSize);
    let reps = 40_000;
    let mut mean = DVector::zeros(20);
    let mut energy = 0.0;
    for _ in 0..reps {
        let omega = oracle.sample_index_set(20, 0.3).unwrap();
        let r = subsample_scale(&x, &omega).unwrap();
        energy += r.dot(&x);
        mean += r;
    }
    mean /= reps as f64;
    energy /= reps as f64;
    // per coordinate sd is |x_i| sqrt((n/|Ω| - 1) / reps) ≤ 1.5 * 1.53 / 200
    assert!((mean - &x).amax() < 4.0 * 1.5 * 1.53 / 200.0);
    assert!((energy - x.norm_squared()).abs() < 0.02 * x.norm_squared());
}

#[test]
fn norm_estimates_are_unbiased_on_average() {
    let m = DMatrix::from_fn(40, 6, |i, j| ((i * (j + 3)) % 11) as f64 / 11.0 - 0.4);
    let truth: Vec<f64> = m.column_iter().map(|c| c.norm_squared()).collect();
    let hidden = DenseMatrix::new(m).unwrap();
    let mut sums = [0.0; 6];
    let reps = 4000;
    for seed in 0..reps {
        let mut oracle = MatrixOracle::new(hidden.clone(), seed).with_sampling(IndexSampling::FixedSize);
        let w = estimate_column_norms(&mut oracle, 10.0).unwrap();
        for (s, c) in sums.iter_mut().zip(w.scores()) {
            *s += c;
        }
    }
    for (s, t) in sums.iter().zip(&truth) {
        let mean = s / reps as f64;
        assert!((mean - t).abs() < 0.03 * t, "mean {mean} vs {t}");
    }
}
