use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::datagen::{self, SyntheticSpec};
use crate::error::{CssError, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Norm,
    IterNorm,
    LevScore,
    BlockOmp,
    GroupLasso,
    Uniform,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Norm => "norm",
            AlgorithmKind::IterNorm => "iter_norm",
            AlgorithmKind::LevScore => "lev_score",
            AlgorithmKind::BlockOmp => "block_omp",
            AlgorithmKind::GroupLasso => "group_lasso",
            AlgorithmKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One algorithm arm of a sweep.
///
/// `m` overrides the per-column (or per-row, for `lev_score`) sample budget,
/// which otherwise is `α · n1`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmKind,
    /// Written to the CSV in place of the algorithm name.
    pub label: Option<String>,
    pub s: usize,
    /// Target rank; defaults to `s`.
    pub k: Option<usize>,
    pub m: Option<f64>,
    #[serde(default = "default_half")]
    pub epsilon: f64,
    #[serde(default = "default_half")]
    pub delta: f64,
    #[serde(default)]
    pub with_replacement: bool,
    #[serde(default)]
    pub phase2: bool,
}

fn default_half() -> f64 {
    0.5
}

impl AlgorithmSpec {
    pub fn new(name: AlgorithmKind, s: usize) -> Self {
        AlgorithmSpec {
            name,
            label: None,
            s,
            k: None,
            m: None,
            epsilon: 0.5,
            delta: 0.5,
            with_replacement: false,
            phase2: false,
        }
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(self.s)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.to_string())
    }
}

/// Where the hidden matrix comes from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    /// `n1 n2` header followed by rows of reals.
    Dense { path: PathBuf },
    /// Rows of `-1 / 0 / 1`.
    Sign { path: PathBuf },
    /// One SNP per line of two-letter calls.
    Genotype { path: PathBuf },
    /// Grayscale PGM image.
    Pgm { path: PathBuf },
}

impl DatasetSpec {
    /// Loads the matrix, normalised to unit Frobenius norm.
    pub fn load(&self) -> Result<DenseMatrix> {
        let raw = match self {
            DatasetSpec::Synthetic(spec) => return datagen::generate(spec),
            DatasetSpec::Dense { path } => datagen::read_dense(path)?,
            DatasetSpec::Sign { path } => datagen::load_sign_matrix(path)?,
            DatasetSpec::Genotype { path } => datagen::load_genotypes(path)?,
            DatasetSpec::Pgm { path } => datagen::load_grayscale(path)?,
        };
        raw.normalized()
    }

    fn resolve_relative(&mut self, base: &Path) {
        match self {
            DatasetSpec::Synthetic(_) => {}
            DatasetSpec::Dense { path }
            | DatasetSpec::Sign { path }
            | DatasetSpec::Genotype { path }
            | DatasetSpec::Pgm { path } => {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
}

/// A full sweep: every algorithm at every observation rate `α`, `trials`
/// times each. Trial `t` uses seed `seed_base + t` for every arm.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Observation rates `α ∈ (0, 1]`.
    pub missing_rates: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed_base: u64,
    pub output: Option<PathBuf>,
    /// Append a uniform-sampling arm for every distinct `(s, k)` above.
    #[serde(default)]
    pub include_uniform: bool,
}

fn default_trials() -> usize {
    8
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, algorithms: Vec<AlgorithmSpec>, missing_rates: Vec<f64>) -> Self {
        ExperimentConfig {
            dataset,
            algorithms,
            missing_rates,
            trials: default_trials(),
            seed_base: 0,
            output: None,
            include_uniform: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CssError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file; relative dataset paths resolve against its
    /// directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| CssError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.dataset.resolve_relative(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CssError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if self.missing_rates.is_empty() {
            return bad("missing_rates must list at least one value".into());
        }
        if let Some(a) = self.missing_rates.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return bad(format!("observation rate {a} outside (0, 1]"));
        }
        for alg in &self.algorithms {
            if alg.s == 0 {
                return bad(format!("{}: s must be at least 1", alg.label()));
            }
            if alg.k == Some(0) {
                return bad(format!("{}: k must be at least 1", alg.label()));
            }
            if alg.m.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
                return bad(format!("{}: m must be positive", alg.label()));
            }
            if !(alg.epsilon > 0.0 && alg.delta > 0.0) {
                return bad(format!("{}: epsilon and delta must be positive", alg.label()));
            }
        }
        if let DatasetSpec::Synthetic(spec) = &self.dataset {
            spec.validate().map_err(|e| CssError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Algorithm arms including the implicit uniform ones.
    pub fn arms(&self) -> Vec<AlgorithmSpec> {
        let mut arms = self.algorithms.clone();
        if self.include_uniform {
            let mut seen: Vec<(usize, usize)> = arms
                .iter()
                .filter(|a| a.name == AlgorithmKind::Uniform)
                .map(|a| (a.s, a.k()))
                .collect();
            for alg in &self.algorithms {
                let key = (alg.s, alg.k());
                if alg.name != AlgorithmKind::Uniform && !seen.contains(&key) {
                    seen.push(key);
                    let mut u = AlgorithmSpec::new(AlgorithmKind::Uniform, alg.s);
                    u.k = alg.k;
                    arms.push(u);
                }
            }
        }
        arms
    }
}
