//! Gatekeeper to the hidden matrix.
//!
//! Every algorithm reads the ground truth only through a [`MatrixOracle`],
//! which charges each observed entry so that sample complexity can be
//! audited after a run. Re-queried entries are charged again; a separate
//! gauge counts distinct entries.
//!
//! The oracle also owns the run's random generator. Samplers draw all of
//! their randomness from [`MatrixOracle::rng`], so a run is fully determined
//! by the seed and the sequence of calls.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CssError, Result};
use crate::linalg::{DenseMatrix, IndexSet};

/// How random index sets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexSampling {
    /// Each index is included independently with probability `p`.
    #[default]
    Bernoulli,
    /// Exactly `round(p * universe)` indices, uniformly without replacement.
    FixedSize,
}

/// Snapshot of the oracle's query counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryCounts {
    pub entry_queries: u64,
    pub column_queries: u64,
    pub row_queries: u64,
}

#[derive(Debug, Clone)]
pub struct MatrixOracle {
    hidden: DenseMatrix,
    counts: QueryCounts,
    seed: u64,
    rng: ChaCha8Rng,
    sampling: IndexSampling,
    seen: Vec<bool>,
    distinct: u64,
}

impl MatrixOracle {
    pub fn new(hidden: DenseMatrix, seed: u64) -> Self {
        let len = hidden.rows() * hidden.cols();
        MatrixOracle {
            hidden,
            counts: QueryCounts::default(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sampling: IndexSampling::Bernoulli,
            seen: vec![false; len],
            distinct: 0,
        }
    }

    pub fn with_sampling(mut self, sampling: IndexSampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn rows(&self) -> usize {
        self.hidden.rows()
    }

    pub fn cols(&self) -> usize {
        self.hidden.cols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampling(&self) -> IndexSampling {
        self.sampling
    }

    pub fn counts(&self) -> QueryCounts {
        self.counts
    }

    /// `entry_queries + column_queries * n1 + row_queries * n2`.
    pub fn total_entries_observed(&self) -> u64 {
        self.counts.entry_queries
            + self.counts.column_queries * self.rows() as u64
            + self.counts.row_queries * self.cols() as u64
    }

    /// Number of distinct matrix entries revealed so far.
    pub fn distinct_entries(&self) -> u64 {
        self.distinct
    }

    /// The run's random generator.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn mark(&mut self, i: usize, j: usize) {
        let pos = j * self.rows() + i;
        if !self.seen[pos] {
            self.seen[pos] = true;
            self.distinct += 1;
        }
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.rows() {
            return Err(CssError::param(format!(
                "row index {i} out of range for {} rows",
                self.rows()
            )));
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.cols() {
            return Err(CssError::param(format!(
                "column index {j} out of range for {} columns",
                self.cols()
            )));
        }
        Ok(())
    }

    pub fn observe_entry(&mut self, i: usize, j: usize) -> Result<f64> {
        self.check_row(i)?;
        self.check_col(j)?;
        self.counts.entry_queries += 1;
        self.mark(i, j);
        Ok(self.hidden[(i, j)])
    }

    /// `x_{j,Ω}`: the entries of column `j` at the rows in `omega`, in
    /// order. Charges one entry query per index.
    pub fn observe_entries(&mut self, j: usize, omega: &IndexSet) -> Result<DVector<f64>> {
        self.check_col(j)?;
        if omega.universe() != self.rows() {
            return Err(CssError::dim(format!(
                "index set over {} rows, matrix has {}",
                omega.universe(),
                self.rows()
            )));
        }
        self.counts.entry_queries += omega.len() as u64;
        for i in omega.iter() {
            self.mark(i, j);
        }
        Ok(omega.gather(&self.hidden.column(j).into_owned()))
    }

    pub fn observe_column(&mut self, j: usize) -> Result<DVector<f64>> {
        self.check_col(j)?;
        self.counts.column_queries += 1;
        for i in 0..self.rows() {
            self.mark(i, j);
        }
        Ok(self.hidden.column(j).into_owned())
    }

    /// Row `i` returned as a length-`n2` vector.
    pub fn observe_row(&mut self, i: usize) -> Result<DVector<f64>> {
        self.check_row(i)?;
        self.counts.row_queries += 1;
        for j in 0..self.cols() {
            self.mark(i, j);
        }
        Ok(self.hidden.row(i).transpose())
    }

    /// Index set with each position included independently with probability `p`.
    pub fn bernoulli_index_set(&mut self, universe: usize, p: f64) -> Result<IndexSet> {
        check_probability(p)?;
        let indices = (0..universe).filter(|_| self.rng.random_bool(p)).collect();
        IndexSet::new(universe, indices)
    }

    /// Index set drawn according to the oracle's [`IndexSampling`] mode.
    pub fn sample_index_set(&mut self, universe: usize, p: f64) -> Result<IndexSet> {
        match self.sampling {
            IndexSampling::Bernoulli => self.bernoulli_index_set(universe, p),
            IndexSampling::FixedSize => {
                check_probability(p)?;
                let size = ((p * universe as f64).round() as usize).min(universe);
                let picked = index::sample(&mut self.rng, universe, size).into_vec();
                IndexSet::from_unsorted(universe, picked)
            }
        }
    }

    /// Passive observation mask with each entry observed independently with
    /// probability `p`. Drawing the mask reveals nothing; use
    /// [`MatrixOracle::masked_view`] to observe it.
    pub fn bernoulli_mask(&mut self, p: f64) -> Result<ObservationMask> {
        check_probability(p)?;
        let (rows, cols) = (self.rows(), self.cols());
        let observed = (0..rows * cols).map(|_| self.rng.random_bool(p)).collect();
        ObservationMask::new(rows, cols, observed)
    }

    /// `W ∘ M`, charging one entry query per observed position.
    pub fn masked_view(&mut self, mask: &ObservationMask) -> Result<DenseMatrix> {
        if mask.rows() != self.rows() || mask.cols() != self.cols() {
            return Err(CssError::dim(format!(
                "mask is {}x{}, matrix is {}x{}",
                mask.rows(),
                mask.cols(),
                self.rows(),
                self.cols()
            )));
        }
        let mut out = DMatrix::zeros(self.rows(), self.cols());
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                if mask.is_observed(i, j) {
                    out[(i, j)] = self.hidden[(i, j)];
                    self.counts.entry_queries += 1;
                    self.mark(i, j);
                }
            }
        }
        DenseMatrix::new(out)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CssError::param(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Boolean grid `W` of observed positions, column-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(CssError::dim(format!(
                "mask of {rows}x{cols} needs {} flags, got {}",
                rows * cols,
                observed.len()
            )));
        }
        Ok(ObservationMask {
            rows,
            cols,
            observed,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        ObservationMask {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        ObservationMask {
            rows,
            cols,
            observed: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut observed = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                observed.push(f(i, j));
            }
        }
        ObservationMask {
            rows,
            cols,
            observed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[j * self.rows + i]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    /// `W ∘ A` for an arbitrary matrix of matching shape.
    pub fn apply(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(a.shape(), (self.rows, self.cols), "mask shape mismatch");
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            if self.is_observed(i, j) {
                a[(i, j)]
            } else {
                0.0
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag12() -> DenseMatrix {
        DenseMatrix::from_diagonal(&[1.0, 2.0]).unwrap()
    }

    #[test]
    fn entry_queries_are_charged_every_time() {
        let mut o = MatrixOracle::new(diag12(), 0);
        assert_eq!(o.observe_entry(0, 0).unwrap(), 1.0);
        assert_eq!(o.counts().entry_queries, 1);
        assert_eq!(o.observe_entry(0, 0).unwrap(), 1.0);
        assert_eq!(o.counts().entry_queries, 2);
        assert_eq!(o.distinct_entries(), 1);
        o.observe_entry(1, 1).unwrap();
        assert_eq!(o.counts().entry_queries, 3);
        assert!(o.observe_entry(2, 0).is_err());
        assert!(o.observe_entry(0, 2).is_err());
    }

    #[test]
    fn column_and_row_queries() {
        let mut o = MatrixOracle::new(diag12(), 0);
        assert_eq!(o.observe_column(1).unwrap().as_slice(), &[0.0, 2.0]);
        assert_eq!(o.total_entries_observed(), 2);
        assert_eq!(o.observe_row(0).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(o.counts().row_queries, 1);
        assert_eq!(o.total_entries_observed(), 4);
        assert_eq!(o.distinct_entries(), 3);
        assert!(o.observe_column(5).is_err());
        assert!(o.observe_row(5).is_err());
    }

    #[test]
    fn bernoulli_extremes_and_errors() {
        let mut o = MatrixOracle::new(diag12(), 3);
        assert!(o.bernoulli_index_set(10, 1.0).unwrap().is_full());
        assert!(o.bernoulli_index_set(10, 0.0).unwrap().is_empty());
        assert!(o.bernoulli_index_set(10, 1.5).is_err());
        assert!(o.bernoulli_index_set(10, -0.1).is_err());
    }

    #[test]
    fn bernoulli_size_within_binomial_band() {
        let mut o = MatrixOracle::new(diag12(), 17);
        let omega = o.bernoulli_index_set(1000, 0.3).unwrap();
        let sd = (1000.0_f64 * 0.3 * 0.7).sqrt();
        assert!((omega.len() as f64 - 300.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn fixed_size_mode() {
        let mut o = MatrixOracle::new(diag12(), 1).with_sampling(IndexSampling::FixedSize);
        assert_eq!(o.sample_index_set(100, 0.25).unwrap().len(), 25);
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = MatrixOracle::new(diag12(), 9);
        let mut b = MatrixOracle::new(diag12(), 9);
        for _ in 0..5 {
            assert_eq!(
                a.bernoulli_index_set(50, 0.4).unwrap(),
                b.bernoulli_index_set(50, 0.4).unwrap()
            );
        }
    }

    #[test]
    fn masked_views() {
        let mut o = MatrixOracle::new(diag12(), 0);
        let full = o.masked_view(&ObservationMask::full(2, 2)).unwrap();
        assert_eq!(full.as_matrix(), diag12().as_matrix());
        assert_eq!(o.counts().entry_queries, 4);
        let none = o.masked_view(&ObservationMask::empty(2, 2)).unwrap();
        assert_eq!(none.norm(), 0.0);
        assert_eq!(o.counts().entry_queries, 4);
        let checker = ObservationMask::from_fn(2, 2, |i, j| i == j);
        let d = o.masked_view(&checker).unwrap();
        assert_eq!(d.as_matrix(), diag12().as_matrix());
        assert!(o.masked_view(&ObservationMask::full(3, 2)).is_err());
    }
}
