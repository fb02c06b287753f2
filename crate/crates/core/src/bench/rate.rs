//! The convergence-rate experiment: over a grid of `(p, s_main, s_int, n)`
//! draw design, hierarchical truth and noise, fit every penalty and record
//! `||theta_hat - beta||_1` against the predicted scale
//! `s sqrt(ln p1 / n)`.

use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::a0::NoiseSpec;
use super::distribution::DesignDistribution;
use super::truth::draw_truth;
use crate::design::{expand_design, Expansion, InteractionIndex};
use crate::error::{Error, Result};
use crate::linalg::{fit_line, LineFit};
use crate::penalty::{self, PenaltySpec};
use crate::rng::{derived_seed, from_seed};
use crate::solver::{LambdaRule, LeastSquares, SolverConfig};

pub const CSV_HEADER: [&str; 9] = ["penalty", "n", "p", "s", "rep", "l1_error", "pe_error", "predicted", "seed"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub p: Vec<usize>,
    pub s_main: Vec<usize>,
    pub s_int: Vec<usize>,
    pub n: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self { p: vec![10, 20, 40], s_main: vec![2, 3], s_int: vec![1, 2], n: vec![200, 400, 800, 1600] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub design: DesignDistribution,
    pub noise: NoiseSpec,
    /// Absolute value of every nonzero truth coefficient.
    pub magnitude: f64,
    pub grid: Grid,
    pub replications: usize,
    #[serde(serialize_with = "ser_specs", deserialize_with = "de_specs")]
    pub penalties: Vec<PenaltySpec>,
    pub lambda: LambdaRule,
    /// Replace `ke` and `h0` of a theory rule by the noise's psi_2 norm and
    /// the design's largest column standard deviation.
    pub calibrate_constants: bool,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            design: DesignDistribution::default(),
            noise: NoiseSpec { ke: 0.5, ..NoiseSpec::default() },
            magnitude: 2.0,
            grid: Grid::default(),
            replications: 20,
            penalties: vec![PenaltySpec::Cap { q: crate::Exponent::TWO }, PenaltySpec::Lasso],
            lambda: LambdaRule::Theory { multiplier: 2.0, constants: Default::default() },
            calibrate_constants: true,
            solver: SolverConfig::default(),
        }
    }
}

fn ser_specs<S: Serializer>(specs: &[PenaltySpec], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(specs.iter().map(|p| p.to_string()))
}

fn de_specs<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<PenaltySpec>, D::Error> {
    use serde::de::Error as _;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Object(PenaltySpec),
    }
    Vec::<Raw>::deserialize(de)?
        .into_iter()
        .map(|r| match r {
            Raw::Text(s) => s.parse().map_err(D::Error::custom),
            Raw::Object(p) => Ok(p),
        })
        .collect()
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.p.is_empty() || g.s_main.is_empty() || g.s_int.is_empty() || g.n.is_empty() {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if self.penalties.is_empty() {
            return Err(Error::Config("at least one penalty is required".into()));
        }
        if g.n.iter().any(|&n| n < 2) {
            return Err(Error::Config("every n must be at least 2".into()));
        }
        if !(self.magnitude >= 0.0) || !self.magnitude.is_finite() {
            return Err(Error::Config("magnitude must be finite and nonnegative".into()));
        }
        self.noise.validate()?;
        self.solver.validate()?;
        for &p in &g.p {
            let idx = InteractionIndex::new(p)?;
            self.design.sigma(p)?;
            for spec in &self.penalties {
                spec.bind(idx)?;
            }
        }
        Ok(())
    }

    /// Cells in canonical order `(p, s_main, s_int, n)`, infeasible ones
    /// included so cell indices do not depend on feasibility.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &p in &g.p {
            for &s_main in &g.s_main {
                for &s_int in &g.s_int {
                    for &n in &g.n {
                        let index = out.len() as u64;
                        out.push(Cell { index, p, s_main, s_int, n });
                    }
                }
            }
        }
        out
    }

    pub fn lambda(&self, n: usize, p: usize) -> Result<f64> {
        let p1 = InteractionIndex::new(p)?.p1();
        match self.lambda {
            LambdaRule::Theory { multiplier, mut constants } if self.calibrate_constants => {
                constants.ke = self.noise.ke;
                constants.h0 = self.design.h0(p)?;
                LambdaRule::Theory { multiplier, constants }.resolve(n, p1)
            }
            rule => rule.resolve(n, p1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub index: u64,
    pub p: usize,
    pub s_main: usize,
    pub s_int: usize,
    pub n: usize,
}

impl Cell {
    pub fn feasible(&self) -> bool {
        self.s_main <= self.p && self.s_int <= self.s_main * self.s_main.saturating_sub(1) / 2
    }

    pub fn s(&self) -> usize {
        self.s_main + self.s_int
    }

    /// `s sqrt(ln p1 / n)`.
    pub fn predicted(&self) -> f64 {
        let p1 = (self.p * (self.p + 1) / 2) as f64;
        self.s() as f64 * (p1.ln() / self.n as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub penalty: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub rep: usize,
    pub l1_error: f64,
    /// `Pe(theta_hat - beta)` under the fitted penalty.
    pub pe_error: f64,
    pub predicted: f64,
    pub seed: u64,
    #[serde(skip)]
    pub s_main: usize,
    #[serde(skip)]
    pub s_int: usize,
    #[serde(skip)]
    pub lambda: f64,
    #[serde(skip)]
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub penalty: String,
    pub n: usize,
    pub p: usize,
    pub s_main: usize,
    pub s_int: usize,
    pub s: usize,
    pub lambda: f64,
    pub predicted: f64,
    pub mean_l1_error: f64,
    /// Monte Carlo standard error of `mean_l1_error`.
    pub l1_error_se: f64,
    pub mean_pe_error: f64,
    pub replications: usize,
    pub nonconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySummary {
    pub penalty: String,
    /// `ln(mean l1 error)` regressed on `ln(s sqrt(ln p1 / n))` over cells.
    pub fit: Option<LineFit>,
    pub replications: usize,
    /// Replications with `Pe(v) <= 3 ||v||_1`.
    pub pe_within_three_l1: usize,
    /// Replications with `Pe(v) >= ||v||_1`.
    pub pe_at_least_l1: usize,
    pub nonconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub cells: Vec<CellSummary>,
    pub summary: Vec<PenaltySummary>,
    /// Grid cells whose truth is infeasible (`s_int > s_main (s_main - 1) / 2`).
    pub skipped: Vec<Cell>,
    pub note: String,
}

impl RateReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.penalty.clone(),
                r.n.to_string(),
                r.p.to_string(),
                r.s.to_string(),
                r.rep.to_string(),
                fmt_f64(r.l1_error),
                fmt_f64(r.pe_error),
                fmt_f64(r.predicted),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_for(&self, spec: &PenaltySpec) -> Option<&PenaltySummary> {
        let name = spec.to_string();
        self.summary.iter().find(|s| s.penalty == name)
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Relative slack used when comparing penalty values to `l1` norms.
const PE_TOL: f64 = 1e-9;

pub fn rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let cells = cfg.cells();
    let (feasible, skipped): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(Cell::feasible);
    let tasks: Vec<(Cell, usize)> = feasible.iter().flat_map(|&c| (0..cfg.replications).map(move |r| (c, r))).collect();
    let per_task: Vec<Vec<RateRow>> =
        tasks.par_iter().map(|&(cell, rep)| replicate(cfg, cell, rep)).collect::<Result<_>>()?;
    let rows: Vec<RateRow> = per_task.into_iter().flatten().collect();

    let mut cell_summaries = Vec::new();
    let mut summary = Vec::new();
    for spec in &cfg.penalties {
        let name = spec.to_string();
        let mine: Vec<&RateRow> = rows.iter().filter(|r| r.penalty == name).collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for cell in &feasible {
            let reps: Vec<&&RateRow> = mine
                .iter()
                .filter(|r| r.n == cell.n && r.p == cell.p && r.s_main == cell.s_main && r.s_int == cell.s_int)
                .collect();
            let k = reps.len() as f64;
            let mean = reps.iter().map(|r| r.l1_error).sum::<f64>() / k;
            let var = reps.iter().map(|r| (r.l1_error - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            if mean > 0.0 {
                xs.push(cell.predicted().ln());
                ys.push(mean.ln());
            }
            cell_summaries.push(CellSummary {
                penalty: name.clone(),
                n: cell.n,
                p: cell.p,
                s_main: cell.s_main,
                s_int: cell.s_int,
                s: cell.s(),
                lambda: reps.first().map_or(f64::NAN, |r| r.lambda),
                predicted: cell.predicted(),
                mean_l1_error: mean,
                l1_error_se: (var / k).sqrt(),
                mean_pe_error: reps.iter().map(|r| r.pe_error).sum::<f64>() / k,
                replications: reps.len(),
                nonconverged: reps.iter().filter(|r| !r.converged).count(),
            });
        }
        let tol = |r: &RateRow| PE_TOL * (1.0 + r.l1_error);
        summary.push(PenaltySummary {
            penalty: name.clone(),
            fit: fit_line(&xs, &ys).ok(),
            replications: mine.len(),
            pe_within_three_l1: mine.iter().filter(|r| r.pe_error <= 3.0 * r.l1_error + tol(r)).count(),
            pe_at_least_l1: mine.iter().filter(|r| r.pe_error >= r.l1_error - tol(r)).count(),
            nonconverged: mine.iter().filter(|r| !r.converged).count(),
        });
    }
    Ok(RateReport {
        rows,
        cells: cell_summaries,
        summary,
        skipped,
        note: "lambda and predicted bounds hold up to unspecified absolute constants".into(),
    })
}

fn replicate(cfg: &ExperimentConfig, cell: Cell, rep: usize) -> Result<Vec<RateRow>> {
    let seed = derived_seed(cfg.seed, cell.index, rep as u64);
    let mut rng = from_seed(seed);
    let x = cfg.design.sample(cell.n, cell.p, &mut rng)?;
    let (beta, _) = draw_truth(cell.p, cell.s_main, cell.s_int, cfg.magnitude, &mut rng)?;
    let raw = expand_design(&x, Expansion::raw())?;
    let signal = raw.values() * DVector::from_column_slice(&beta);
    let noise = cfg.noise.sample(cell.n, &mut rng);
    let mut y: Vec<f64> = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter_mut().for_each(|v| *v -= mean);
    let z = expand_design(&x, Expansion::centered())?;
    let ls = LeastSquares::new(&z, &y)?;
    let lambda = cfg.lambda(cell.n, cell.p)?;
    let idx = z.index();

    cfg.penalties
        .iter()
        .map(|spec| {
            let fit = ls.fit(spec, lambda, &cfg.solver)?;
            let v: Vec<f64> = fit.theta.iter().zip(&beta).map(|(a, b)| a - b).collect();
            Ok(RateRow {
                penalty: spec.to_string(),
                n: cell.n,
                p: cell.p,
                s: cell.s(),
                rep,
                l1_error: v.iter().map(|a| a.abs()).sum(),
                pe_error: penalty::evaluate(spec, &v, idx)?,
                predicted: cell.predicted(),
                seed,
                s_main: cell.s_main,
                s_int: cell.s_int,
                lambda,
                converged: fit.converged,
            })
        })
        .collect()
}
