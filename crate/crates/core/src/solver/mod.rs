//! Penalized least squares `(1/2n) ||Y - Z theta||^2 + lambda * Pe(theta)`.
//!
//! The minimizer is computed by consensus splitting (ADMM): every penalty
//! atom owns a latent copy of its coordinates, the smooth part is handled by
//! a cached linear solve, and the atoms by their proximal operators. The
//! splitting is exact for overlapping groups.

mod admm;
pub mod lambda;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, InteractionIndex};
use crate::error::{Error, Result};
use crate::penalty::{self, PenaltySpec};
use crate::support::SupportSet;

pub use admm::SplittingState;
pub use lambda::{lambda_theory, LambdaRule, TheoryConstants};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative primal residual tolerance.
    pub primal_tol: f64,
    /// Relative dual residual tolerance.
    pub dual_tol: f64,
    /// Initial splitting step `rho`.
    pub rho: f64,
    /// Rebalance `rho` against the residuals every 10 iterations.
    pub adaptive_rho: bool,
    /// Entries with `|theta| <= threshold` are left out of the reported
    /// support; `None` means `1e-6 * ||theta||_inf`.
    pub support_threshold: Option<f64>,
    /// Start every fit of a lambda path from zero instead of the previous
    /// solution.
    pub restart: bool,
    /// Record the objective at every iteration.
    pub record_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            primal_tol: 1e-8,
            dual_tol: 1e-8,
            rho: 1.0,
            adaptive_rho: true,
            support_threshold: None,
            restart: false,
            record_objective: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.primal_tol > 0.0 && self.dual_tol > 0.0) {
            return Err(Error::domain("solver tolerances must be positive"));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::domain("splitting step rho must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be positive"));
        }
        if let Some(t) = self.support_threshold {
            if !(t >= 0.0) {
                return Err(Error::domain("support threshold must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub penalty: PenaltySpec,
    pub lambda: f64,
    /// Coefficients in design column order.
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub support: SupportSet,
    pub support_threshold: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Final splitting step.
    pub rho: f64,
    /// Mean of the response removed before fitting; zero when the caller
    /// fitted an uncentered response.
    #[serde(default)]
    pub intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
}

impl FitResult {
    pub fn main_effects(&self) -> &[f64] {
        let p = InteractionIndex::from_columns(self.theta.len()).map_or(0, |i| i.p());
        &self.theta[..p]
    }

    pub fn interactions(&self) -> &[f64] {
        let p = InteractionIndex::from_columns(self.theta.len()).map_or(0, |i| i.p());
        &self.theta[p..]
    }
}

/// The smooth part of the problem with its cached cross products.
pub struct LeastSquares<'a> {
    z: &'a DMatrix<f64>,
    y: DVector<f64>,
    idx: InteractionIndex,
    /// `Z^T Y / n`.
    zty: DVector<f64>,
    /// `Z^T Z / n`, formed only when `n >= p1`.
    gram: Option<DMatrix<f64>>,
    col_sq: Vec<f64>,
}

impl<'a> LeastSquares<'a> {
    pub fn new(design: &'a DesignMatrix, y: &[f64]) -> Result<Self> {
        let z = design.values();
        if z.nrows() != y.len() {
            return Err(Error::domain(format!(
                "design has {} rows but the response has {} entries",
                z.nrows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite values in the design or response"));
        }
        let n = z.nrows() as f64;
        let y = DVector::from_column_slice(y);
        let zty = z.tr_mul(&y) / n;
        let gram = (z.nrows() >= z.ncols()).then(|| z.tr_mul(z) / n);
        let col_sq = z.column_iter().map(|c| c.norm_squared() / n).collect();
        Ok(Self { z, y, idx: design.index(), zty, gram, col_sq })
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn index(&self) -> InteractionIndex {
        self.idx
    }

    /// `Z^T Y / n`.
    pub fn score(&self) -> &DVector<f64> {
        &self.zty
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let t = DVector::from_column_slice(theta);
        (&self.y - self.z * t).norm_squared() / (2.0 * self.n() as f64)
    }

    pub fn fit(&self, spec: &PenaltySpec, lambda: f64, cfg: &SolverConfig) -> Result<FitResult> {
        Ok(self.fit_warm(spec, lambda, cfg, None)?.0)
    }

    /// Fit starting from a previous splitting state (warm start).
    pub fn fit_warm(
        &self,
        spec: &PenaltySpec,
        lambda: f64,
        cfg: &SolverConfig,
        warm: Option<SplittingState>,
    ) -> Result<(FitResult, SplittingState)> {
        cfg.validate()?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        let atoms = penalty::atoms(spec, self.idx)?;
        let run = admm::solve(self, &atoms, spec, lambda, cfg, warm)?;
        let theta = run.theta;
        let objective = self.loss(&theta) + lambda * penalty::evaluate(spec, &theta, self.idx)?;
        let inf_norm = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = cfg.support_threshold.unwrap_or(1e-6 * inf_norm);
        let support = SupportSet::from_columns(
            self.idx,
            theta.iter().enumerate().filter(|(_, v)| v.abs() > threshold).map(|(i, _)| i),
        )?;
        let result = FitResult {
            penalty: *spec,
            lambda,
            theta,
            objective,
            iterations: run.iterations,
            converged: run.converged,
            support,
            support_threshold: threshold,
            primal_residual: run.primal_residual,
            dual_residual: run.dual_residual,
            rho: run.state.rho,
            intercept: 0.0,
            objective_trace: run.trace,
        };
        Ok((result, run.state))
    }
}

/// Minimize `(1/2n) ||Y - Z theta||^2 + lambda * Pe(theta)`.
pub fn fit(design: &DesignMatrix, y: &[f64], spec: &PenaltySpec, lambda: f64, cfg: &SolverConfig) -> Result<FitResult> {
    LeastSquares::new(design, y)?.fit(spec, lambda, cfg)
}

/// `(1/2n) ||Y - Z theta||^2 + lambda * Pe(theta)`.
pub fn objective(design: &DesignMatrix, y: &[f64], theta: &[f64], lambda: f64, spec: &PenaltySpec) -> Result<f64> {
    let z = design.values();
    if z.nrows() != y.len() || z.ncols() != theta.len() {
        return Err(Error::domain("objective: dimension mismatch"));
    }
    let resid = DVector::from_column_slice(y) - z * DVector::from_column_slice(theta);
    Ok(resid.norm_squared() / (2.0 * y.len() as f64) + lambda * penalty::evaluate(spec, theta, design.index())?)
}

/// Smallest lambda known to give the zero solution, `||Z^T Y / n||_inf` for
/// the lasso. For the hierarchical families `Pe >= ||.||_1`, so the same
/// bound is valid; blocks with `d0 >= 2` only guarantee `Pe >= ||.||_inf` and
/// use `||Z^T Y / n||_1`.
pub fn zero_lambda_bound(spec: &PenaltySpec, score: &[f64]) -> f64 {
    match spec {
        PenaltySpec::ContiguousBlock { d0, .. } if *d0 >= 2 => score.iter().map(|v| v.abs()).sum(),
        _ => score.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Fits along a decreasing lambda grid, each warm-started from the previous
/// solution unless `cfg.restart` is set.
pub fn lambda_path(
    design: &DesignMatrix,
    y: &[f64],
    spec: &PenaltySpec,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<FitResult>> {
    if grid.is_empty() {
        return Err(Error::domain("lambda grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain("lambda grid must be sorted in decreasing order"));
    }
    let ls = LeastSquares::new(design, y)?;
    let mut warm = None;
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let (res, state) = ls.fit_warm(spec, lambda, cfg, if cfg.restart { None } else { warm.take() })?;
        out.push(res);
        warm = Some(state);
    }
    Ok(out)
}

/// Log-spaced decreasing grid from `lambda_max` down to `ratio * lambda_max`.
pub fn log_grid(lambda_max: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(lambda_max > 0.0) || !(ratio > 0.0 && ratio <= 1.0) || count == 0 {
        return Err(Error::domain("log grid needs lambda_max > 0, ratio in (0, 1] and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.ln() / (count - 1) as f64;
    Ok((0..count).map(|i| lambda_max * (step * i as f64).exp()).collect())
}
