use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{CssError, Result};
use crate::linalg::DenseMatrix;

/// Parameters of a random test matrix.
///
/// `k = 0` requests a full-rank Gaussian matrix (and ignores `sigma`).
/// With `repeated > 0` one column is amplified by `scale` and copied into
/// `repeated` positions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    /// Noise-to-signal ratio: `‖R‖_F ≈ sigma · ‖signal‖_F`.
    pub sigma: f64,
    pub repeated: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n1: 50,
            n2: 50,
            k: 5,
            sigma: 0.0,
            repeated: 0,
            scale: 10.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn square(n: usize, k: usize, sigma: f64, seed: u64) -> Self {
        SyntheticSpec {
            n1: n,
            n2: n,
            k,
            sigma,
            seed,
            ..Self::default()
        }
    }

    pub fn coherent(mut self, repeated: usize, scale: f64) -> Self {
        self.repeated = repeated;
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(CssError::param(format!(
                "dimensions must be positive, got {}x{}",
                self.n1, self.n2
            )));
        }
        if self.k > self.n1.min(self.n2) {
            return Err(CssError::param(format!(
                "rank {} exceeds min({}, {})",
                self.k, self.n1, self.n2
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(CssError::param(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.repeated >= self.n2 {
            return Err(CssError::param(format!(
                "repeated = {} must be below n2 = {}",
                self.repeated, self.n2
            )));
        }
        if !(self.scale.is_finite() && self.scale != 0.0) {
            return Err(CssError::param(format!("scale must be finite and nonzero, got {}", self.scale)));
        }
        Ok(())
    }
}

/// A normalised low-rank-plus-noise matrix with its two parts, all scaled by
/// the same factor so that `matrix = signal + noise` and `‖matrix‖_F = 1`.
#[derive(Debug, Clone)]
pub struct LowRankParts {
    pub matrix: DenseMatrix,
    pub signal: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

/// A normalised matrix carrying `repeated` copies of one amplified column.
#[derive(Debug, Clone)]
pub struct CoherentDesign {
    pub matrix: DenseMatrix,
    /// Column whose amplified copy was duplicated.
    pub source: usize,
    /// Positions overwritten by the copy, ascending.
    pub positions: Vec<usize>,
    pub signal: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn raw_signal(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n1, n2) = (spec.n1, spec.n2);
    if spec.k == 0 {
        return gaussian(rng, n1, n2);
    }
    if n1 == n2 {
        let b = gaussian(rng, n1, spec.k);
        &b * b.transpose()
    } else {
        let b1 = gaussian(rng, n1, spec.k);
        let b2 = gaussian(rng, n2, spec.k);
        b1 * b2.transpose()
    }
}

/// `R_ij ~ N(0, σ² ‖signal‖_F² / (n1 n2))`; none for the full-rank design.
fn raw_noise(spec: &SyntheticSpec, signal: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n1, n2) = signal.shape();
    if spec.k == 0 || spec.sigma == 0.0 {
        return DMatrix::zeros(n1, n2);
    }
    let sd = spec.sigma * signal.norm() / ((n1 * n2) as f64).sqrt();
    gaussian(rng, n1, n2) * sd
}

fn normalize_parts(signal: DMatrix<f64>, noise: DMatrix<f64>) -> Result<LowRankParts> {
    let total = &signal + &noise;
    let norm = total.norm();
    if norm == 0.0 {
        return Err(CssError::degenerate("generated matrix is zero"));
    }
    Ok(LowRankParts {
        matrix: DenseMatrix::new(total / norm)?,
        signal: signal / norm,
        noise: noise / norm,
    })
}

/// `BBᵀ + R` (or `B1B2ᵀ + R` when not square), split into its parts.
pub fn gen_lowrank_parts(spec: &SyntheticSpec) -> Result<LowRankParts> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signal = raw_signal(spec, &mut rng);
    let noise = raw_noise(spec, &signal, &mut rng);
    normalize_parts(signal, noise)
}

/// Normalised `BBᵀ + R`; requires `k ≥ 1`.
pub fn gen_lowrank_noise(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    if spec.k == 0 {
        return Err(CssError::param("low-rank generator needs k >= 1"));
    }
    gen_lowrank_parts(spec).map(|p| p.matrix)
}

/// Normalised full-rank standard Gaussian matrix.
pub fn gen_gaussian(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    let spec = SyntheticSpec { k: 0, ..spec.clone() };
    gen_lowrank_parts(&spec).map(|p| p.matrix)
}

/// The amplified column is taken from the noiseless signal and copied over
/// `repeated` positions before the noise is added, so copies agree exactly
/// only when `sigma = 0`.
pub fn coherent_design(spec: &SyntheticSpec) -> Result<CoherentDesign> {
    spec.validate()?;
    if spec.repeated == 0 {
        return Err(CssError::param("coherent design needs repeated >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut signal = raw_signal(spec, &mut rng);
    let mut noise = raw_noise(spec, &signal, &mut rng);
    // the copied column carries its noise, so the copies are identical
    let source = rng.random_range(0..spec.n2);
    let signal_copy = signal.column(source) * spec.scale;
    let noise_copy = noise.column(source) * spec.scale;
    let mut positions = index::sample(&mut rng, spec.n2, spec.repeated).into_vec();
    positions.sort_unstable();
    for &p in &positions {
        signal.set_column(p, &signal_copy);
        noise.set_column(p, &noise_copy);
    }
    let parts = normalize_parts(signal, noise)?;
    Ok(CoherentDesign {
        matrix: parts.matrix,
        source,
        positions,
        signal: parts.signal,
        noise: parts.noise,
    })
}

pub fn gen_coherent(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    coherent_design(spec).map(|d| d.matrix)
}

/// Dispatches on `k` and `repeated`.
pub fn generate(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    if spec.repeated > 0 {
        gen_coherent(spec)
    } else {
        gen_lowrank_parts(spec).map(|p| p.matrix)
    }
}
