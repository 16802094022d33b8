//! Dense linear-algebra kernels used by every sampler and metric.
//!
//! Matrices are stored column-major ([`nalgebra::DMatrix`]). Free functions
//! take `&DMatrix<f64>` so both raw matrices and [`DenseMatrix`] (which
//! dereferences to one) can be passed.

use std::fmt;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{CssError, Result};

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// A validated real matrix: at least one row and column, all entries finite.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(CssError::dim(format!(
                "matrix must be non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % matrix.nrows(), pos / matrix.nrows());
            return Err(CssError::param(format!("non-finite entry at ({i}, {j})")));
        }
        Ok(DenseMatrix(matrix))
    }

    /// Builds a matrix from entries listed column by column.
    pub fn from_column_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(CssError::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_column_slice(rows, cols, entries))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(CssError::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    /// `max(rows, cols)`.
    pub fn max_dim(&self) -> usize {
        self.rows().max(self.cols())
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Returns a copy scaled to unit Frobenius norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.0.norm();
        if norm == 0.0 {
            return Err(CssError::degenerate("cannot normalize a zero matrix"));
        }
        Ok(DenseMatrix(&self.0 / norm))
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

/// Sorted, distinct positions in `[0, universe)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    universe: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(universe: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CssError::param("index set must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(CssError::param(format!(
                    "index {last} outside universe of size {universe}"
                )));
            }
        }
        Ok(IndexSet { universe, indices })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(universe: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(universe, indices)
    }

    pub fn full(universe: usize) -> Self {
        IndexSet {
            universe,
            indices: (0..universe).collect(),
        }
    }

    pub fn empty(universe: usize) -> Self {
        IndexSet {
            universe,
            indices: Vec::new(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.universe
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `x_Ω`: the entries of `x` at the positions of this set, in order.
    pub fn gather(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.iter().map(|i| x[i]))
    }

    /// The rows of `m` at the positions of this set.
    pub fn gather_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_rows(self.indices.iter())
    }
}

/// A matrix with orthonormal columns spanning a subspace of `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    basis: DMatrix<f64>,
}

impl OrthoBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        OrthoBasis {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    /// Wraps a matrix the caller guarantees to have orthonormal columns.
    pub(crate) fn from_orthonormal_unchecked(basis: DMatrix<f64>) -> Self {
        OrthoBasis { basis }
    }

    /// Wraps a matrix after checking `QᵀQ = I` within `1e-8`.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let d = basis.ncols();
        if d > basis.nrows() {
            return Err(CssError::dim("basis has more columns than rows"));
        }
        let gram = basis.tr_mul(&basis);
        if (&gram - DMatrix::identity(d, d)).norm() > 1e-8 {
            return Err(CssError::param("columns are not orthonormal"));
        }
        Ok(OrthoBasis { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Adds the span of `columns` to the basis.
    ///
    /// Each column is orthogonalised against the current basis twice
    /// (classical Gram-Schmidt with one re-orthogonalisation pass). A column
    /// whose residual norm is at most `tol` times the largest column norm
    /// of the batch is dropped. Returns the number of vectors added.
    pub fn extend(&mut self, columns: &DMatrix<f64>, tol: f64) -> usize {
        assert_eq!(columns.nrows(), self.ambient_dim(), "ambient dimension mismatch");
        let scale = columns
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let threshold = tol * scale;
        let mut added = 0;
        for c in columns.column_iter() {
            if self.dim() == self.ambient_dim() {
                break;
            }
            let mut v = c.clone_owned();
            for _ in 0..2 {
                let coeff = self.basis.tr_mul(&v);
                v -= &self.basis * coeff;
            }
            let norm = v.norm();
            if norm > threshold {
                v /= norm;
                let d = self.dim();
                let basis = std::mem::replace(&mut self.basis, DMatrix::zeros(0, 0));
                self.basis = basis.insert_column(d, 0.0);
                self.basis.set_column(d, &v);
                added += 1;
            }
        }
        added
    }

    /// `Uᵀx`.
    pub fn coefficients(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(x)
    }

    /// `U(Uᵀx)`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.basis.tr_mul(x)
    }

    /// `M - U(UᵀM)` applied column-wise.
    pub fn residual_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m - &self.basis * self.basis.tr_mul(m)
    }

    /// `U_Ω`: the rows of the basis at positions `omega`.
    pub fn restrict(&self, omega: &IndexSet) -> DMatrix<f64> {
        omega.gather_rows(&self.basis)
    }
}

/// Orthonormal basis of the column span of `columns`, dropping columns that
/// are numerically dependent on earlier ones (see [`OrthoBasis::extend`]).
pub fn orthonormal_basis(columns: &DMatrix<f64>, tol: f64) -> Result<OrthoBasis> {
    if columns.nrows() == 0 {
        return Err(CssError::dim("columns must have at least one row"));
    }
    if !(tol > 0.0) {
        return Err(CssError::param(format!("tolerance must be positive, got {tol}")));
    }
    let mut basis = OrthoBasis::empty(columns.nrows());
    basis.extend(columns, tol);
    Ok(basis)
}

/// `x - U(Uᵀx)`.
pub fn project_residual(x: &DVector<f64>, basis: &OrthoBasis) -> DVector<f64> {
    x - basis.project(x)
}

/// Rank-k truncated singular value decomposition `U diag(sigma) Vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: OrthoBasis,
    pub sigma: DVector<f64>,
    pub v: OrthoBasis,
}

impl TruncatedSvd {
    /// The best rank-k approximation `M_k`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = self.u.matrix();
        let v = self.v.matrix();
        let mut us = u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * v.transpose()
    }
}

/// Full thin SVD with singular values sorted in nonincreasing order.
/// Returns `(U, sigma, V)` with `U: n1 x r`, `V: n2 x r`, `r = min(n1, n2)`.
pub(crate) fn sorted_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_sorted = u.select_columns(order.iter());
    let v_sorted = v_t.select_rows(order.iter()).transpose();
    let s_sorted = DVector::from_iterator(order.len(), order.iter().map(|&i| s[i].max(0.0)));
    (u_sorted, s_sorted, v_sorted)
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

/// `‖M - M_k‖_F`, the error of the best rank-k approximation.
pub fn best_rank_error(m: &DMatrix<f64>, k: usize) -> f64 {
    let s = singular_values(m);
    s.iter().skip(k).map(|v| v * v).sum::<f64>().sqrt()
}

pub fn truncated_svd(m: &DMatrix<f64>, k: usize) -> Result<TruncatedSvd> {
    let r = m.nrows().min(m.ncols());
    if k == 0 || k > r {
        return Err(CssError::param(format!("rank k = {k} must lie in [1, {r}]")));
    }
    let (u, s, v) = sorted_svd(m);
    Ok(TruncatedSvd {
        u: OrthoBasis::from_orthonormal_unchecked(u.columns(0, k).into_owned()),
        sigma: s.rows(0, k).into_owned(),
        v: OrthoBasis::from_orthonormal_unchecked(v.columns(0, k).into_owned()),
    })
}

/// Moore-Penrose pseudoinverse of a (possibly rank-deficient) matrix.
/// Singular values at or below `tol * sigma_max` are treated as zero.
pub fn pseudo_inverse(c: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if c.ncols() == 0 || c.nrows() == 0 {
        return DMatrix::zeros(c.ncols(), c.nrows());
    }
    let (u, s, v) = sorted_svd(c);
    let cutoff = tol * s[0];
    let rank = s.iter().take_while(|&&x| x > cutoff && x > 0.0).count();
    if rank == 0 {
        return DMatrix::zeros(c.ncols(), c.nrows());
    }
    let mut v_r = v.columns(0, rank).into_owned();
    for j in 0..rank {
        v_r.column_mut(j).scale_mut(1.0 / s[j]);
    }
    v_r * u.columns(0, rank).transpose()
}

/// `X = C†M`, the Frobenius-optimal coefficients of `M` in the columns of `C`.
pub fn pinv_apply(c: &DMatrix<f64>, m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if c.nrows() != m.nrows() {
        return Err(CssError::dim(format!(
            "C has {} rows but M has {}",
            c.nrows(),
            m.nrows()
        )));
    }
    Ok(pseudo_inverse(c, tol) * m)
}

/// `R_Ω(x)`: keeps the entries in `omega`, scaled by `n1 / |Ω|`; zero elsewhere.
pub fn subsample_scale(x: &DVector<f64>, omega: &IndexSet) -> Result<DVector<f64>> {
    if omega.universe() != x.len() {
        return Err(CssError::dim(format!(
            "index set universe {} does not match vector length {}",
            omega.universe(),
            x.len()
        )));
    }
    if omega.is_empty() {
        return Err(CssError::param("subsampling requires a non-empty index set"));
    }
    let scale = x.len() as f64 / omega.len() as f64;
    let mut out = DVector::zeros(x.len());
    for i in omega.iter() {
        out[i] = scale * x[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn dense_matrix_rejects_bad_input() {
        assert!(DenseMatrix::new(DMatrix::zeros(0, 3)).is_err());
        assert!(DenseMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_slice(2, 2, &[1.0]).is_err());
        let m = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m[(0, 1)], 2.0);
        assert_eq!(m.max_dim(), 2);
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(3, vec![0, 0]).is_err());
        assert!(IndexSet::new(3, vec![2, 1]).is_err());
        assert!(IndexSet::new(3, vec![3]).is_err());
        let s = IndexSet::from_unsorted(5, vec![4, 1, 1, 3]).unwrap();
        assert_eq!(s.as_slice(), &[1, 3, 4]);
        assert!(s.contains(3) && !s.contains(2));
    }

    #[test]
    fn basis_of_collinear_columns() {
        let cols = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let b = orthonormal_basis(&cols, RANK_TOL).unwrap();
        assert_eq!(b.dim(), 1);
        assert!((b.matrix()[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn basis_of_identity_and_zero() {
        let b = orthonormal_basis(&DMatrix::identity(3, 3), RANK_TOL).unwrap();
        assert_eq!(b.dim(), 3);
        let z = orthonormal_basis(&DMatrix::zeros(4, 2), RANK_TOL).unwrap();
        assert_eq!(z.dim(), 0);
        assert!(orthonormal_basis(&DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn basis_of_gaussian_is_orthonormal() {
        let g = gaussian(8, 4, 1);
        let b = orthonormal_basis(&g, RANK_TOL).unwrap();
        assert_eq!(b.dim(), 4);
        let gram = b.matrix().tr_mul(b.matrix());
        assert!((gram - DMatrix::<f64>::identity(4, 4)).norm() < 1e-10);
        // same span: projecting the inputs leaves nothing behind
        assert!(b.residual_matrix(&g).norm() < 1e-10 * g.norm());
    }

    #[test]
    fn residual_examples() {
        let b = orthonormal_basis(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), RANK_TOL).unwrap();
        let r = project_residual(&DVector::from_vec(vec![1.0, 1.0]), &b);
        assert!((r - DVector::from_vec(vec![0.0, 1.0])).norm() < 1e-15);
        let inside = project_residual(&DVector::from_vec(vec![5.0, 0.0]), &b);
        assert!(inside.norm() < 1e-15);
        let empty = OrthoBasis::empty(2);
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(project_residual(&x, &empty), x);
    }

    #[test]
    fn svd_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let t = truncated_svd(&d, 2).unwrap();
        assert!((t.sigma[0] - 3.0).abs() < 1e-12 && (t.sigma[1] - 2.0).abs() < 1e-12);
        assert!(truncated_svd(&d, 0).is_err());
        assert!(truncated_svd(&d, 4).is_err());

        let u = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let m = &u * v.transpose();
        let t = truncated_svd(&m, 1).unwrap();
        assert!((t.sigma[0] - 15.0).abs() < 1e-12);
        assert!((m - t.reconstruct()).norm() < 1e-12);
    }

    #[test]
    fn svd_tail_matches_gram_eigenvalues() {
        // Oracle: the squared singular values are the eigenvalues of MᵀM.
        let m = gaussian(6, 6, 7);
        let eig = (m.transpose() * &m).symmetric_eigen();
        let mut lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let tail: f64 = lambdas[3..].iter().sum();
        let t = truncated_svd(&m, 3).unwrap();
        let err = (&m - t.reconstruct()).norm_squared();
        assert!((err - tail).abs() < 1e-9 * tail.max(1.0));
        for w in t.sigma.as_slice().windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
    }

    #[test]
    fn pinv_examples() {
        let c = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let x = pinv_apply(&c, &DMatrix::identity(2, 2), RANK_TOL).unwrap();
        assert_eq!(x.shape(), (1, 2));
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && x[(0, 1)].abs() < 1e-14);

        let sq = gaussian(4, 4, 3);
        let x = pinv_apply(&sq, &sq, RANK_TOL).unwrap();
        assert!((&sq * x - &sq).norm() < 1e-10);
        assert!(pinv_apply(&c, &DMatrix::identity(3, 3), RANK_TOL).is_err());
    }

    #[test]
    fn pinv_matches_normal_equations() {
        let c = gaussian(6, 3, 11);
        let m = gaussian(6, 5, 12);
        let x = pinv_apply(&c, &m, RANK_TOL).unwrap();
        let gram = c.tr_mul(&c);
        let chol = gram.cholesky().unwrap();
        for j in 0..5 {
            let rhs = c.tr_mul(&m.column(j).into_owned());
            let xj = chol.solve(&rhs);
            assert!((xj - x.column(j)).norm() < 1e-8);
        }
    }

    #[test]
    fn subsample_examples() {
        let x = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let omega = IndexSet::new(3, vec![0, 2]).unwrap();
        let r = subsample_scale(&x, &omega).unwrap();
        assert_eq!(r, DVector::from_vec(vec![3.0, 0.0, 9.0]));
        assert_eq!(subsample_scale(&x, &IndexSet::full(3)).unwrap(), x);
        assert!(subsample_scale(&x, &IndexSet::empty(3)).is_err());
    }
}
