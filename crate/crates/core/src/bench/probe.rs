//! Correlation between the linear and quadratic parts of `Z^T u`.
//!
//! Split a unit `u = (u1, u2)`; `u2` fills a symmetric zero-diagonal `W`
//! with `w_jk = w_kj = u2_(j,k)`, so that `Z^T u = X^T u1 + X^T W X / 2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::distribution::DesignDistribution;
use super::psi::{psi_norm_estimate, PsiKind};
use crate::design::InteractionIndex;
use crate::error::{Error, Result};
use crate::rng::from_seed;

const QMAX: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReProbe {
    pub u: Vec<f64>,
    /// Row-major `p x p`.
    pub w: Vec<Vec<f64>>,
    /// Sample `corr(X^T u1, X^T W X)`; zero when either part of `u` is zero.
    pub rho_hat: f64,
    /// psi_1 estimate of the standardized quadratic form; zero when `u2 = 0`.
    pub psi1_hat: f64,
    pub n_mc: usize,
}

pub fn build_w(u: &[f64], idx: InteractionIndex) -> DMatrix<f64> {
    let p = idx.p();
    let mut w = DMatrix::zeros(p, p);
    for (j, k) in idx.pairs() {
        let v = u[idx.pair_column_unchecked(j, k)];
        w[(j, k)] = v;
        w[(k, j)] = v;
    }
    w
}

pub fn re_probe(u: &[f64], dist: &DesignDistribution, n_mc: usize, seed: u64) -> Result<ReProbe> {
    let idx = InteractionIndex::from_columns(u.len())?;
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("probe direction must have unit norm, got {norm}")));
    }
    let p = idx.p();
    let w = build_w(u, idx);
    let x = dist.sample(n_mc, p, &mut from_seed(seed))?;
    let u1 = nalgebra::DVector::from_column_slice(&u[..p]);
    let linear: Vec<f64> = (&x * &u1).iter().copied().collect();
    let xw = &x * &w;
    let quad: Vec<f64> = xw.row_iter().zip(x.row_iter()).map(|(a, b)| a.dot(&b)).collect();

    let has_linear = u[..p].iter().any(|v| *v != 0.0);
    let has_quad = u[p..].iter().any(|v| *v != 0.0);
    let rho_hat = if has_linear && has_quad { correlation(&linear, &quad) } else { 0.0 };
    let psi1_hat = if has_quad {
        let (mean, sd) = mean_sd(&quad);
        let standardized: Vec<f64> = quad.iter().map(|v| (v - mean) / sd).collect();
        psi_norm_estimate(&standardized, PsiKind::Psi1, QMAX)?
    } else {
        0.0
    };
    Ok(ReProbe {
        u: u.to_vec(),
        w: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
        rho_hat,
        psi1_hat,
        n_mc,
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    cov / (sa * sb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::psi::psi_norm_estimate;
    use crate::design::{expand_design, Expansion};
    use crate::rng::from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_unit(p1: usize, seed: u64) -> Vec<f64> {
        let mut rng = from_seed(seed);
        let v: Vec<f64> = (0..p1).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn quadratic_form_reproduces_z_t_u() {
        let idx = InteractionIndex::new(4).unwrap();
        let u = random_unit(idx.p1(), 1);
        let x = DesignDistribution::default().sample(5, 4, &mut from_seed(2)).unwrap();
        let z = expand_design(&x, Expansion::raw()).unwrap();
        let w = build_w(&u, idx);
        assert!(w == w.transpose() && w.diagonal().iter().all(|v| *v == 0.0));
        for i in 0..5 {
            let xi = x.row(i).transpose();
            let direct: f64 = z.values().row(i).iter().zip(&u).map(|(a, b)| a * b).sum();
            let split =
                xi.dot(&nalgebra::DVector::from_column_slice(&u[..4])) + 0.5 * (xi.transpose() * &w * &xi)[(0, 0)];
            assert!((direct - split).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_identity_correlation_vanishes() {
        let n_mc = 100_000;
        for seed in 0..100 {
            let u = random_unit(10, 100 + seed);
            let probe = re_probe(&u, &DesignDistribution::default(), n_mc, seed).unwrap();
            assert!(probe.rho_hat.abs() <= 5.0 / (n_mc as f64).sqrt(), "seed {seed}: {}", probe.rho_hat);
        }
    }

    #[test]
    fn pure_main_direction_has_zero_correlation() {
        let u = vec![0.6, 0.8, 0.0];
        let probe = re_probe(&u, &DesignDistribution::default(), 20_000, 1).unwrap();
        assert_eq!(probe.rho_hat, 0.0);
        assert_eq!(probe.psi1_hat, 0.0);
        assert!(re_probe(&[1.0, 1.0, 0.0], &DesignDistribution::default(), 20_000, 1).is_err());
    }

    #[test]
    fn single_interaction_psi1_is_bounded() {
        let n_mc = 1_000_000;
        let probe = re_probe(&[0.0, 0.0, 1.0], &DesignDistribution::default(), n_mc, 3).unwrap();
        let mut rng = from_seed(4);
        let x1: Vec<f64> = (0..n_mc).map(|_| rng.sample(StandardNormal)).collect();
        let psi2 = psi_norm_estimate(&x1, PsiKind::Psi2, 10).unwrap();
        assert!(probe.psi1_hat <= 2.5 * psi2 * psi2, "{} vs {}", probe.psi1_hat, psi2);
    }
}
