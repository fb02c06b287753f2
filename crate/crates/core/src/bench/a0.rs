//! Frequency of the noise-correlation event
//! `||Z^T eps / n||_inf < C_{e,delta} sqrt(ln p1 / n)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::DesignDistribution;
use crate::design::{expand_design, Expansion, InteractionIndex};
use crate::error::{Error, Result};
use crate::rng::{stream, BenchRng};
use crate::solver::lambda::{lambda_theory, noise_event_lower_bound, TheoryConstants};

/// `E|N(0,1)|`: the psi_2 norm of a standard Gaussian under the moment
/// definition (the supremum is attained at q = 1).
pub const GAUSSIAN_PSI2: f64 = 0.797_884_560_802_865_4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// `+-sigma` with equal probability.
    Rademacher,
}

/// Noise with a prescribed psi_2 norm `ke`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub ke: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { kind: NoiseKind::Gaussian, ke: 1.0 }
    }
}

impl NoiseSpec {
    /// Standard deviation giving psi_2 norm `ke` (for `+-sigma` the norm is
    /// `sigma`).
    pub fn sigma(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => self.ke / GAUSSIAN_PSI2,
            NoiseKind::Rademacher => self.ke,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ke >= 0.0) || !self.ke.is_finite() {
            return Err(Error::domain("noise psi_2 norm must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn sample(&self, n: usize, rng: &mut BenchRng) -> Vec<f64> {
        let sigma = self.sigma();
        (0..n)
            .map(|_| match self.kind {
                NoiseKind::Gaussian => sigma * rng.sample::<f64, _>(StandardNormal),
                NoiseKind::Rademacher => {
                    if rng.random::<bool>() {
                        sigma
                    } else {
                        -sigma
                    }
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A0Report {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub multiplier: f64,
    pub threshold: f64,
    pub frequency: f64,
    /// `q1n * q2n` with `C_K = 1`; only meaningful up to constants.
    pub lower_bound: f64,
}

/// Per-trial ratio `||Z^T eps / n||_inf / (C_{e,delta} sqrt(ln p1 / n))`.
/// The event holds at multiplier `m` exactly when the ratio is below `m`.
pub fn a0_statistics(
    n: usize,
    p: usize,
    dist: &DesignDistribution,
    noise: &NoiseSpec,
    tc: &TheoryConstants,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    noise.validate()?;
    let p1 = InteractionIndex::new(p)?.p1();
    let threshold = lambda_theory(n, p1, tc)?;
    dist.sigma(p)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, 0, t as u64);
            let x = dist.sample(n, p, &mut rng)?;
            let z = expand_design(&x, Expansion::centered())?;
            let eps = nalgebra::DVector::from_vec(noise.sample(n, &mut rng));
            let score = z.values().tr_mul(&eps) / n as f64;
            Ok(score.amax() / threshold)
        })
        .collect()
}

/// Fraction of trials on which the event holds with threshold
/// `multiplier * C_{e,delta} sqrt(ln p1 / n)`.
#[allow(clippy::too_many_arguments)]
pub fn a0_event_rate(
    n: usize,
    p: usize,
    dist: &DesignDistribution,
    noise: &NoiseSpec,
    tc: &TheoryConstants,
    multiplier: f64,
    trials: usize,
    seed: u64,
) -> Result<A0Report> {
    let stats = a0_statistics(n, p, dist, noise, tc, trials, seed)?;
    let p1 = InteractionIndex::new(p)?.p1();
    Ok(A0Report {
        n,
        p,
        trials,
        multiplier,
        threshold: multiplier * lambda_theory(n, p1, tc)?,
        frequency: frequency_below(&stats, multiplier),
        lower_bound: noise_event_lower_bound(n, p1, tc.delta, tc.eta0, 1.0),
    })
}

pub fn frequency_below(stats: &[f64], multiplier: f64) -> f64 {
    stats.iter().filter(|&&r| r < multiplier).count() as f64 / stats.len() as f64
}
