//! Monte Carlo spectrum of the covariance of the expanded design rows.

use serde::{Deserialize, Serialize};

use super::distribution::{smallest_eigenvalue, DesignDistribution, MIN_EIGENVALUE};
use crate::design::{expand_design, Expansion, InteractionIndex};
use crate::error::{Error, Result};
use crate::linalg::{sample_covariance, symmetric_eigenvalues};
use crate::rng::from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaZEigs {
    pub min: f64,
    pub max: f64,
    pub n_mc: usize,
    /// Smallest eigenvalue of `Sigma_x`.
    pub sigma_x_min: f64,
    /// Set when `Sigma_x` is numerically singular, in which case the
    /// positivity guarantee for `Sigma_z` has no premise.
    pub warning: Option<String>,
}

/// Extreme eigenvalues of the sample covariance of `n_mc` centered rows
/// of `Z`. A singular `Sigma_x` is sampled anyway and flagged.
pub fn sigma_z_eigs(dist: &DesignDistribution, p: usize, n_mc: usize, seed: u64) -> Result<SigmaZEigs> {
    let p1 = InteractionIndex::new(p)?.p1();
    if n_mc < 10 * p1 {
        return Err(Error::domain(format!("n_mc = {n_mc} is below 10 * p1 = {}", 10 * p1)));
    }
    let sigma = dist.covariance.matrix(p)?;
    let sigma_x_min = smallest_eigenvalue(&sigma);
    let warning = (sigma_x_min <= MIN_EIGENVALUE).then(|| {
        format!("Sigma_x is singular (smallest eigenvalue {sigma_x_min:.3e}); the eigenvalue bound premise fails")
    });
    let x = dist.sample_with(&sigma, n_mc, &mut from_seed(seed));
    let z = expand_design(&x, Expansion::raw())?;
    let ev = symmetric_eigenvalues(&sample_covariance(z.values()));
    Ok(SigmaZEigs { min: ev[0], max: ev[ev.len() - 1], n_mc, sigma_x_min, warning })
}
