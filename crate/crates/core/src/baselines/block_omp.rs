use nalgebra::DMatrix;

use crate::error::{CssError, Result};
use crate::linalg::{OrthoBasis, RANK_TOL};
use crate::oracle::ObservationMask;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOmpOutput {
    /// Selected columns in pick order.
    pub indices: Vec<usize>,
    /// `‖Y^{(t)}‖_F` for `t = 1..=s+1`; nonincreasing.
    pub residual_norms: Vec<f64>,
}

/// Greedy block orthogonal matching pursuit on the zero-filled matrix.
///
/// With `Y = W ∘ M`, step `t` forms `D = Yᵀ(W ∘ Y^{(t)})`, picks the row of
/// largest norm among unselected columns (lowest index on ties), adds the
/// zero-filled column to the span `𝒞` and sets `Y^{(t+1)} = Y^{(t)} - P_𝒞 Y^{(t)}`.
pub fn block_omp_css(masked: &DMatrix<f64>, mask: &ObservationMask, s: usize) -> Result<BlockOmpOutput> {
    let (n1, n2) = masked.shape();
    if mask.rows() != n1 || mask.cols() != n2 {
        return Err(CssError::dim(format!(
            "mask is {}x{} but the matrix is {n1}x{n2}",
            mask.rows(),
            mask.cols()
        )));
    }
    if s == 0 || s > n2 {
        return Err(CssError::param(format!("s = {s} must lie in [1, {n2}]")));
    }
    if masked.iter().all(|&v| v == 0.0) {
        return Err(CssError::degenerate("masked matrix is identically zero"));
    }

    let mut span = OrthoBasis::empty(n1);
    let mut residual = masked.clone();
    let mut selected = vec![false; n2];
    let mut indices = Vec::with_capacity(s);
    let mut residual_norms = vec![residual.norm()];

    for _ in 0..s {
        let d = masked.tr_mul(&mask.apply(&residual));
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in d.row_iter().enumerate() {
            if selected[i] {
                continue;
            }
            let score = row.norm();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("s <= n2 leaves an unselected column");
        selected[pick] = true;
        indices.push(pick);
        span.extend(&masked.columns(pick, 1).into_owned(), RANK_TOL);
        residual = span.residual_matrix(masked);
        residual_norms.push(residual.norm());
    }
    Ok(BlockOmpOutput {
        indices,
        residual_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_picks_dominant_first() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]));
        let out = block_omp_css(&m, &ObservationMask::full(2, 2), 2).unwrap();
        assert_eq!(out.indices, vec![0, 1]);
        assert!(out.residual_norms[2] < 1e-14);
    }

    #[test]
    fn dominant_orthogonal_column() {
        let mut m = DMatrix::zeros(4, 3);
        m[(0, 0)] = 0.3;
        m[(1, 0)] = 0.2;
        m[(0, 1)] = 0.1;
        m[(1, 1)] = 0.4;
        m[(3, 2)] = 5.0;
        let out = block_omp_css(&m, &ObservationMask::full(4, 3), 1).unwrap();
        assert_eq!(out.indices, vec![2]);
    }

    #[test]
    fn ties_go_to_lowest_index_and_no_repeats() {
        let m = DMatrix::from_element(3, 3, 1.0);
        let out = block_omp_css(&m, &ObservationMask::full(3, 3), 3).unwrap();
        assert_eq!(out.indices, vec![0, 1, 2]);
        assert!(out.residual_norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn errors() {
        let mask = ObservationMask::full(2, 2);
        assert!(matches!(
            block_omp_css(&DMatrix::zeros(2, 2), &mask, 1),
            Err(CssError::Degenerate(_))
        ));
        let m = DMatrix::<f64>::identity(2, 2);
        assert!(block_omp_css(&m, &mask, 0).is_err());
        assert!(block_omp_css(&m, &mask, 3).is_err());
        assert!(block_omp_css(&m, &ObservationMask::full(3, 2), 1).is_err());
    }
}
