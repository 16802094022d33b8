//! Row-sparse self-representation `min ‖Y - YX‖_F² + λ Σ_i ‖X_(i)‖` subject
//! to `diag(X) = 0`, with `Y = W ∘ M`.
//!
//! Solved by monotone accelerated proximal gradient: function-value restart,
//! backtracking on the Lipschitz estimate, and a prox that zeroes the
//! diagonal entry of each row before group soft-thresholding it.

use nalgebra::DMatrix;

use crate::error::{CssError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step `1/L`; must not exceed `1 / (2 ‖YᵀY‖₂)` to be safe.
    Fixed(f64),
    Backtracking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLassoConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub step: StepRule,
    /// Stop once the KKT residual drops to this value.
    pub tol: f64,
    /// Keep at most this many nonzero rows (largest norms first).
    pub target_s: Option<usize>,
    /// Points on the geometric λ grid used by [`group_lasso_path`].
    pub path_len: usize,
    /// Smallest grid value as a fraction of `λ_max`.
    pub path_min_ratio: f64,
}

impl GroupLassoConfig {
    pub fn new(lambda: f64) -> Self {
        GroupLassoConfig {
            lambda,
            max_iters: 20_000,
            step: StepRule::Backtracking,
            tol: 1e-8,
            target_s: None,
            path_len: 20,
            path_min_ratio: 1e-3,
        }
    }

    pub fn target_s(mut self, s: usize) -> Self {
        self.target_s = Some(s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CssError::param(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(CssError::param(format!("tol must be positive, got {}", self.tol)));
        }
        if let StepRule::Fixed(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(CssError::param(format!("step must be positive, got {step}")));
            }
        }
        if self.target_s == Some(0) {
            return Err(CssError::param("target_s must be at least 1"));
        }
        if self.path_len < 2 || !(self.path_min_ratio > 0.0 && self.path_min_ratio < 1.0) {
            return Err(CssError::param(
                "lambda path needs at least 2 points and a ratio in (0, 1)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLassoOutput {
    /// Nonzero rows ordered by decreasing norm, truncated to `target_s`.
    pub selected: Vec<usize>,
    /// Nonzero rows before truncation.
    pub nonzero_rows: usize,
    pub coefficients: DMatrix<f64>,
    pub objective: f64,
    /// Objective after each iteration; nonincreasing up to rounding.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub lambda: f64,
}

/// Solutions along a decreasing λ grid with warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLassoPath {
    pub lambdas: Vec<f64>,
    pub solutions: Vec<GroupLassoOutput>,
    /// First grid point whose nonzero-row count reaches `target_s`, else the
    /// last point.
    pub chosen: usize,
    pub reached_target: bool,
}

impl GroupLassoPath {
    pub fn chosen_solution(&self) -> &GroupLassoOutput {
        &self.solutions[self.chosen]
    }
}

/// Smallest λ at which `X = 0` is optimal: `max_i ‖(2YᵀY)_{i,-i}‖`.
pub fn lambda_max(masked: &DMatrix<f64>) -> f64 {
    let g = masked.tr_mul(masked);
    (0..g.nrows())
        .map(|i| off_diagonal_row_norm(&g, i) * 2.0)
        .fold(0.0, f64::max)
}

pub fn group_lasso_css(masked: &DMatrix<f64>, cfg: &GroupLassoConfig) -> Result<GroupLassoOutput> {
    cfg.validate()?;
    let n2 = masked.ncols();
    solve(masked, cfg, DMatrix::zeros(n2, n2))
}

/// Geometric grid from `λ_max` down to `λ_max · path_min_ratio`. Requires
/// `target_s`.
pub fn group_lasso_path(masked: &DMatrix<f64>, cfg: &GroupLassoConfig) -> Result<GroupLassoPath> {
    cfg.validate()?;
    let target = cfg
        .target_s
        .ok_or_else(|| CssError::param("lambda path needs target_s"))?;
    let top = lambda_max(masked);
    if top == 0.0 {
        return Err(CssError::degenerate(
            "no column correlates with any other in the masked matrix",
        ));
    }
    let ratio = cfg.path_min_ratio.powf(1.0 / (cfg.path_len - 1) as f64);
    let lambdas: Vec<f64> = (0..cfg.path_len)
        .map(|t| top * ratio.powi(t as i32))
        .collect();

    let n2 = masked.ncols();
    let mut warm = DMatrix::zeros(n2, n2);
    let mut solutions = Vec::with_capacity(lambdas.len());
    let mut chosen = None;
    for &lambda in &lambdas {
        let point = GroupLassoConfig {
            lambda,
            ..cfg.clone()
        };
        let out = solve(masked, &point, warm)?;
        warm = out.coefficients.clone();
        let reached = out.nonzero_rows >= target;
        solutions.push(out);
        if reached {
            chosen = Some(solutions.len() - 1);
            break;
        }
    }
    let reached_target = chosen.is_some();
    Ok(GroupLassoPath {
        chosen: chosen.unwrap_or(solutions.len() - 1),
        lambdas: lambdas[..solutions.len()].to_vec(),
        solutions,
        reached_target,
    })
}

fn off_diagonal_row_norm(a: &DMatrix<f64>, i: usize) -> f64 {
    let row = a.row(i);
    (row.norm_squared() - row[i] * row[i]).max(0.0).sqrt()
}

struct Problem<'a> {
    y: &'a DMatrix<f64>,
    gram: DMatrix<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn smooth(&self, x: &DMatrix<f64>) -> f64 {
        (self.y - self.y * x).norm_squared()
    }

    fn penalty(&self, x: &DMatrix<f64>) -> f64 {
        self.lambda * x.row_iter().map(|r| r.norm()).sum::<f64>()
    }

    fn objective(&self, x: &DMatrix<f64>) -> f64 {
        self.smooth(x) + self.penalty(x)
    }

    /// `2(GX - G)`.
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.gram * x - &self.gram) * 2.0
    }

    /// Zero the diagonal, then shrink every row by `τ` in norm.
    fn prox(&self, mut v: DMatrix<f64>, tau: f64) -> DMatrix<f64> {
        for i in 0..v.nrows() {
            v[(i, i)] = 0.0;
            let mut row = v.row_mut(i);
            let norm = row.norm();
            if norm <= tau {
                row.fill(0.0);
            } else {
                row *= 1.0 - tau / norm;
            }
        }
        v
    }

    /// Largest violation of the optimality conditions over off-diagonal
    /// coordinates.
    fn kkt_residual(&self, x: &DMatrix<f64>) -> f64 {
        let g = self.gradient(x);
        let mut worst = 0.0_f64;
        for i in 0..x.nrows() {
            let r_norm = off_diagonal_row_norm(x, i);
            let violation = if r_norm > 0.0 {
                let mut sq = 0.0;
                for j in 0..x.ncols() {
                    if j != i {
                        let v = g[(i, j)] + self.lambda * x[(i, j)] / r_norm;
                        sq += v * v;
                    }
                }
                sq.sqrt()
            } else {
                (off_diagonal_row_norm(&g, i) - self.lambda).max(0.0)
            };
            worst = worst.max(violation);
        }
        worst
    }
}

const ROUNDING_SLACK: f64 = 8.0 * f64::EPSILON;

fn solve(masked: &DMatrix<f64>, cfg: &GroupLassoConfig, start: DMatrix<f64>) -> Result<GroupLassoOutput> {
    let n2 = masked.ncols();
    let problem = Problem {
        y: masked,
        gram: masked.tr_mul(masked),
        lambda: cfg.lambda,
    };

    // the prox also projects a warm start onto the feasible set
    let mut x = problem.prox(start, 0.0);
    let mut f_x = problem.objective(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut lipschitz = match cfg.step {
        StepRule::Fixed(step) => 1.0 / step,
        StepRule::Backtracking => (2.0 * problem.gram.trace() / n2 as f64).max(f64::MIN_POSITIVE),
    };

    let mut trace = Vec::new();
    let mut kkt = problem.kkt_residual(&x);
    let mut iterations = 0;
    while kkt > cfg.tol && iterations < cfg.max_iters {
        iterations += 1;
        let grad = problem.gradient(&y);
        let f_y = problem.smooth(&y);
        let z = loop {
            let z = problem.prox(&y - &grad * (1.0 / lipschitz), cfg.lambda / lipschitz);
            if cfg.step != StepRule::Backtracking {
                break z;
            }
            let diff = &z - &y;
            let model = f_y + grad.dot(&diff) + 0.5 * lipschitz * diff.norm_squared();
            // relative slack absorbs rounding in the two objective evaluations
            if problem.smooth(&z) <= model + 1e-14 * f_y.abs().max(1.0) {
                break z;
            }
            lipschitz *= 2.0;
        };

        let f_z = problem.objective(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // near the optimum true decreases fall below the rounding of `f`
        if f_z <= f_x + ROUNDING_SLACK * f_x.abs() {
            y = &z + (&z - &x) * ((t - 1.0) / t_next);
            x = z;
            f_x = f_z;
            t = t_next;
        } else {
            // restart the momentum from the best point so far
            y = x.clone();
            t = 1.0;
        }
        trace.push(f_x);
        kkt = problem.kkt_residual(&x);
    }

    let mut rows: Vec<(usize, f64)> = x
        .row_iter()
        .enumerate()
        .map(|(i, r)| (i, r.norm()))
        .filter(|&(_, norm)| norm > 0.0)
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let nonzero_rows = rows.len();
    if let Some(s) = cfg.target_s {
        rows.truncate(s);
    }
    Ok(GroupLassoOutput {
        selected: rows.into_iter().map(|(i, _)| i).collect(),
        nonzero_rows,
        objective: f_x,
        objective_trace: trace,
        iterations,
        converged: kkt <= cfg.tol,
        kkt_residual: kkt,
        lambda: cfg.lambda,
        coefficients: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pinv_apply, RANK_TOL};

    fn well_conditioned() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.3, -0.2, 0.1, //
                0.1, 1.5, 0.4, -0.3, //
                -0.3, 0.2, 1.8, 0.2, //
                0.2, -0.1, 0.3, 1.2,
            ],
        )
    }

    #[test]
    fn above_lambda_max_everything_vanishes() {
        let y = well_conditioned();
        let out = group_lasso_css(&y, &GroupLassoConfig::new(lambda_max(&y) * 1.0001)).unwrap();
        assert!(out.selected.is_empty());
        assert!(out.coefficients.iter().all(|&v| v == 0.0));
        assert!(out.converged);
    }

    #[test]
    fn zero_lambda_matches_per_column_least_squares() {
        let y = well_conditioned();
        let mut cfg = GroupLassoConfig::new(0.0);
        cfg.tol = 1e-10;
        let out = group_lasso_css(&y, &cfg).unwrap();
        assert!(out.converged);

        let mut best = 0.0;
        for j in 0..4 {
            let others: Vec<usize> = (0..4).filter(|&i| i != j).collect();
            let a = y.select_columns(others.iter());
            let b = y.columns(j, 1).into_owned();
            let coef = pinv_apply(&a, &b, RANK_TOL).unwrap();
            best += (&b - &a * coef).norm_squared();
        }
        assert!((out.objective - best).abs() < 1e-8, "{} vs {best}", out.objective);
    }

    #[test]
    fn duplicate_columns_match_grid_search() {
        let x = nalgebra::DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let y = DMatrix::from_columns(&[x.clone(), x.clone()]);
        let lambda = 0.5;
        let mut cfg = GroupLassoConfig::new(lambda);
        cfg.tol = 1e-10;
        let out = group_lasso_css(&y, &cfg).unwrap();
        assert!(out.selected.iter().all(|&i| i < 2));

        // X = [[0, a], [a, 0]] by symmetry; scan a on a fine grid
        let xn = x.norm_squared();
        let grid_best = (0..=200_000)
            .map(|t| t as f64 / 100_000.0)
            .map(|a| 2.0 * xn * (1.0 - a) * (1.0 - a) + 2.0 * lambda * a)
            .fold(f64::INFINITY, f64::min);
        assert!((out.objective - grid_best).abs() < 1e-6);
    }

    #[test]
    fn objective_never_increases_and_kkt_holds() {
        let y = DMatrix::from_fn(6, 6, |i, j| ((i * 5 + j * 7) % 11) as f64 / 11.0 - 0.4);
        let cfg = GroupLassoConfig::new(0.1 * lambda_max(&y));
        let out = group_lasso_css(&y, &cfg).unwrap();
        assert!(out
            .objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + ROUNDING_SLACK)));
        assert!(out.converged);
        assert!(out.kkt_residual <= 1e-8);
        assert!((0..6).all(|i| out.coefficients[(i, i)] == 0.0));
    }

    #[test]
    fn path_stops_at_target() {
        let y = DMatrix::from_fn(6, 8, |i, j| ((i * 3 + j * j) % 7) as f64 - 3.0);
        let path = group_lasso_path(&y, &GroupLassoConfig::new(0.0).target_s(3)).unwrap();
        assert!(path.reached_target);
        let sol = path.chosen_solution();
        assert!(sol.nonzero_rows >= 3);
        assert_eq!(sol.selected.len(), 3);
        assert!(path.solutions.iter().all(|s| s.kkt_residual <= 1e-8));
        assert!(path.lambdas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn invalid_configs() {
        let y = well_conditioned();
        assert!(group_lasso_css(&y, &GroupLassoConfig::new(-1.0)).is_err());
        let mut cfg = GroupLassoConfig::new(1.0);
        cfg.tol = 0.0;
        assert!(group_lasso_css(&y, &cfg).is_err());
        assert!(group_lasso_path(&y, &GroupLassoConfig::new(1.0)).is_err());
    }
}
