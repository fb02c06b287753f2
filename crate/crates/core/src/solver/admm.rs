//! Consensus ADMM over penalty atoms.
//!
//! Variables: `x` (length p1), one latent copy `z` per atom occurrence
//! (length m), scaled dual `u` (length m). With `A` the m x p1 selection
//! matrix, `A^T A = D` is the diagonal of column multiplicities.
//!
//! * x-update: `(G + rho D) x = c + rho A^T (z - u)`, `G = Z^T Z / n`,
//!   `c = Z^T Y / n`. Cholesky of `G + rho D` when `n >= p1`, otherwise the
//!   Woodbury form with the n x n matrix `n I + Z (rho D)^-1 Z^T`.
//! * z-update: per atom `z_a = prox_{lambda w_a / rho}(x_a + u_a)`.
//! * u-update: `u += A x - z`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{zero_lambda_bound, LeastSquares, SolverConfig};
use crate::error::{Error, Result};
use crate::penalty::prox::prox_in_place;
use crate::penalty::{AtomList, NormKind, PenaltySpec};

const ADAPT_EVERY: usize = 10;
const ADAPT_FACTOR: f64 = 2.0;
const ADAPT_RATIO: f64 = 10.0;
const MAX_ADAPTATIONS: usize = 60;

/// Iterate state, reusable as a warm start for a nearby lambda.
#[derive(Clone, Debug)]
pub struct SplittingState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: f64,
}

pub(super) struct Run {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub trace: Option<Vec<f64>>,
    pub state: SplittingState,
}

struct Layout {
    /// Column of every latent copy.
    column: Vec<usize>,
    /// Copy range, step weight and norm of every atom.
    blocks: Vec<(usize, usize, f64, NormKind)>,
    multiplicity: Vec<f64>,
}

impl Layout {
    fn new(atoms: &AtomList) -> Self {
        let mut column = Vec::with_capacity(atoms.total_len());
        let mut blocks = Vec::with_capacity(atoms.atoms.len());
        for a in &atoms.atoms {
            let start = column.len();
            column.extend(&a.indices);
            blocks.push((start, column.len(), a.weight, a.kind));
        }
        let multiplicity = atoms.multiplicity().into_iter().map(|m| m as f64).collect();
        Self { column, blocks, multiplicity }
    }

    fn gather(&self, x: &[f64], out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(&self.column) {
            *o = x[c];
        }
    }

    /// `out = A^T w`.
    fn scatter(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&v, &c) in w.iter().zip(&self.column) {
            out[c] += v;
        }
    }
}

/// Factorized `(G + rho D)`.
enum Factor {
    Direct(Cholesky<f64, Dyn>),
    Woodbury { inv_diag: DVector<f64>, inner: Cholesky<f64, Dyn> },
}

impl Factor {
    fn new(ls: &LeastSquares<'_>, diag: &[f64], rho: f64) -> Result<Self> {
        let fail = || Error::domain("splitting system is not positive definite");
        match &ls.gram {
            Some(g) => {
                let mut k = g.clone();
                for (i, d) in diag.iter().enumerate() {
                    k[(i, i)] += rho * d;
                }
                Ok(Factor::Direct(Cholesky::new(k).ok_or_else(fail)?))
            }
            None => {
                let inv_diag = DVector::from_iterator(diag.len(), diag.iter().map(|d| 1.0 / (rho * d)));
                let mut scaled = ls.z.clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= inv_diag[j].sqrt();
                }
                let mut inner = &scaled * scaled.transpose();
                for i in 0..inner.nrows() {
                    inner[(i, i)] += ls.n() as f64;
                }
                Ok(Factor::Woodbury { inv_diag, inner: Cholesky::new(inner).ok_or_else(fail)? })
            }
        }
    }

    fn solve(&self, z: &DMatrix<f64>, rhs: &mut DVector<f64>) {
        match self {
            Factor::Direct(ch) => ch.solve_mut(rhs),
            Factor::Woodbury { inv_diag, inner } => {
                rhs.component_mul_assign(inv_diag);
                let mut w = z * &*rhs;
                inner.solve_mut(&mut w);
                let mut corr = z.tr_mul(&w);
                corr.component_mul_assign(inv_diag);
                *rhs -= corr;
            }
        }
    }
}

pub(super) fn solve(
    ls: &LeastSquares<'_>,
    atoms: &AtomList,
    spec: &PenaltySpec,
    lambda: f64,
    cfg: &SolverConfig,
    warm: Option<SplittingState>,
) -> Result<Run> {
    let layout = Layout::new(atoms);
    let p1 = atoms.p1;
    let m = layout.column.len();
    if layout.multiplicity.contains(&0.0) {
        return Err(Error::domain("penalty atoms do not cover every column"));
    }
    let c = ls.score().as_slice();
    let c_inf = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let warm = warm.filter(|w| w.x.len() == p1 && w.z.len() == m && w.u.len() == m);
    if lambda >= zero_lambda_bound(spec, c) {
        let state = SplittingState {
            x: vec![0.0; p1],
            z: vec![0.0; m],
            u: vec![0.0; m],
            rho: warm.as_ref().map_or(cfg.rho, |w| w.rho),
        };
        let trace = cfg.record_objective.then(|| vec![ls.loss(&state.x)]);
        return Ok(Run {
            theta: state.x.clone(),
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            trace,
            state,
        });
    }

    let max_diag = ls.col_sq.iter().fold(0.0f64, |a, &v| a.max(v));
    let scale_x = if max_diag > 0.0 && c_inf > 0.0 { c_inf / max_diag } else { 1.0 };
    let abs_pri = (m as f64).sqrt() * scale_x;
    let abs_dual = (p1 as f64).sqrt() * c_inf.max(f64::MIN_POSITIVE);

    let SplittingState { mut x, mut z, mut u, mut rho } =
        warm.unwrap_or_else(|| SplittingState { x: vec![0.0; p1], z: vec![0.0; m], u: vec![0.0; m], rho: cfg.rho });
    let mut factor = Factor::new(ls, &layout.multiplicity, rho)?;
    let mut ax = vec![0.0; m];
    let mut z_old = vec![0.0; m];
    let mut diff = vec![0.0; m];
    let mut back = vec![0.0; p1];
    let mut rhs = DVector::zeros(p1);
    let mut trace = cfg.record_objective.then(Vec::new);
    let mut adaptations = 0;
    let (mut rel_pri, mut rel_dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;

        // x-update
        for i in 0..m {
            diff[i] = z[i] - u[i];
        }
        layout.scatter(&diff, &mut back);
        for i in 0..p1 {
            rhs[i] = c[i] + rho * back[i];
        }
        factor.solve(ls.z, &mut rhs);
        x.copy_from_slice(rhs.as_slice());

        // z-update
        layout.gather(&x, &mut ax);
        z_old.copy_from_slice(&z);
        for i in 0..m {
            z[i] = ax[i] + u[i];
        }
        for &(start, end, weight, kind) in &layout.blocks {
            prox_in_place(&kind, &mut z[start..end], lambda * weight / rho);
        }

        // u-update and residuals
        let mut r2 = 0.0;
        for i in 0..m {
            let r = ax[i] - z[i];
            u[i] += r;
            r2 += r * r;
            diff[i] = z[i] - z_old[i];
        }
        layout.scatter(&diff, &mut back);
        let s_norm = rho * norm(&back);
        layout.scatter(&u, &mut back);
        let dual_scale = abs_dual + rho * norm(&back);
        let pri_scale = abs_pri + norm(&ax).max(norm(&z));
        rel_pri = r2.sqrt() / pri_scale;
        rel_dual = s_norm / dual_scale;

        if let Some(t) = trace.as_mut() {
            t.push(ls.loss(&x) + lambda * atoms.evaluate(&x));
        }
        if rel_pri <= cfg.primal_tol && rel_dual <= cfg.dual_tol {
            converged = true;
            break;
        }

        if cfg.adaptive_rho
            && iterations % ADAPT_EVERY == 0
            && adaptations < MAX_ADAPTATIONS
            && iterations < cfg.max_iterations / 2
        {
            let balance = (rel_pri / cfg.primal_tol) / (rel_dual / cfg.dual_tol).max(f64::MIN_POSITIVE);
            let new_rho = if balance > ADAPT_RATIO {
                rho * ADAPT_FACTOR
            } else if balance < 1.0 / ADAPT_RATIO {
                rho / ADAPT_FACTOR
            } else {
                rho
            };
            if new_rho != rho {
                u.iter_mut().for_each(|v| *v *= rho / new_rho);
                rho = new_rho;
                factor = Factor::new(ls, &layout.multiplicity, rho)?;
                adaptations += 1;
            }
        }
    }

    Ok(Run {
        theta: x.clone(),
        iterations,
        converged,
        primal_residual: rel_pri,
        dual_residual: rel_dual,
        trace,
        state: SplittingState { x, z, u, rho },
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
