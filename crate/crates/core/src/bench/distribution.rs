//! Random designs `X = E L^T`: rows of `E` are i.i.d. unit-variance
//! marginals, `L L^T = Sigma_x`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::rng::{from_seed, BenchRng};

/// Smallest eigenvalue accepted for a design covariance.
pub const MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformScaled,
}

impl Marginal {
    pub fn sample(self, rng: &mut BenchRng) -> f64 {
        match self {
            Marginal::Gaussian => rng.sample(StandardNormal),
            Marginal::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Marginal::UniformScaled => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// `E e^4` for the unit-variance marginal.
    pub fn fourth_moment(self) -> f64 {
        match self {
            Marginal::Gaussian => 3.0,
            Marginal::Rademacher => 1.0,
            Marginal::UniformScaled => 9.0 / 5.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Covariance {
    #[default]
    Identity,
    /// `Sigma_jk = rho^|j-k|`.
    Ar1 { rho: f64 },
    /// `Sigma_jk = first_row[|j-k|]`, zero beyond the listed lags.
    Toeplitz { first_row: Vec<f64> },
}

impl Covariance {
    pub fn matrix(&self, p: usize) -> Result<DMatrix<f64>> {
        match self {
            Covariance::Identity => Ok(DMatrix::identity(p, p)),
            Covariance::Ar1 { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::domain(format!("AR1 needs |rho| < 1, got {rho}")));
                }
                Ok(DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32)))
            }
            Covariance::Toeplitz { first_row } => {
                if first_row.is_empty() || first_row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("Toeplitz covariance needs a finite, nonempty first row"));
                }
                Ok(DMatrix::from_fn(p, p, |i, j| first_row.get(i.abs_diff(j)).copied().unwrap_or(0.0)))
            }
        }
    }
}

/// `identity`, `ar1:0.5` or `toeplitz:1,0.5,0.25`.
impl std::str::FromStr for Covariance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse covariance {s:?}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let values =
            || -> Result<Vec<f64>> { args.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect() };
        match name.trim() {
            "identity" if args.is_empty() => Ok(Covariance::Identity),
            "ar1" => match values()?.as_slice() {
                [rho] => Ok(Covariance::Ar1 { rho: *rho }),
                _ => Err(bad()),
            },
            "toeplitz" => Ok(Covariance::Toeplitz { first_row: values()? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignDistribution {
    pub kind: Marginal,
    pub covariance: Covariance,
}

impl DesignDistribution {
    pub fn gaussian(covariance: Covariance) -> Self {
        Self { kind: Marginal::Gaussian, covariance }
    }

    /// `Sigma_x`, rejected unless its smallest eigenvalue exceeds
    /// [`MIN_EIGENVALUE`].
    pub fn sigma(&self, p: usize) -> Result<DMatrix<f64>> {
        let s = self.covariance.matrix(p)?;
        let min = smallest_eigenvalue(&s);
        if !(min > MIN_EIGENVALUE) {
            return Err(Error::domain(format!(
                "design covariance is not positive definite (smallest eigenvalue {min:.3e})"
            )));
        }
        Ok(s)
    }

    /// Draw `n` rows using the symmetric root of `sigma`, which may be
    /// singular.
    pub fn sample_with(&self, sigma: &DMatrix<f64>, n: usize, rng: &mut BenchRng) -> DMatrix<f64> {
        let p = sigma.nrows();
        let root = psd_sqrt(sigma);
        // row-major fill keeps the stream order independent of storage
        let mut e = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                e[(i, j)] = self.kind.sample(rng);
            }
        }
        if matches!(self.covariance, Covariance::Identity) {
            e
        } else {
            e * root
        }
    }

    pub fn sample(&self, n: usize, p: usize, rng: &mut BenchRng) -> Result<DMatrix<f64>> {
        if n == 0 || p == 0 {
            return Err(Error::domain("designs need n >= 1 and p >= 1"));
        }
        let sigma = self.sigma(p)?;
        Ok(self.sample_with(&sigma, n, rng))
    }

    /// Population `var(Z_j)` for every expanded column, main effects first.
    pub fn column_variances(&self, p: usize) -> Result<Vec<f64>> {
        let sigma = self.sigma(p)?;
        let root = psd_sqrt(&sigma);
        let excess = self.kind.fourth_moment() - 3.0;
        let mut out: Vec<f64> = (0..p).map(|j| sigma[(j, j)]).collect();
        for j in 0..p {
            for k in j + 1..p {
                let mixed: f64 = (0..p).map(|a| root[(j, a)].powi(2) * root[(k, a)].powi(2)).sum();
                out.push(sigma[(j, j)] * sigma[(k, k)] + sigma[(j, k)].powi(2) + excess * mixed);
            }
        }
        Ok(out)
    }

    /// `h0 = max_j sd(Z_j)`.
    pub fn h0(&self, p: usize) -> Result<f64> {
        Ok(self.column_variances(p)?.into_iter().fold(0.0f64, f64::max).sqrt())
    }
}

pub(crate) fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `n x p` design with i.i.d. rows drawn from `dist`.
pub fn gen_design(n: usize, p: usize, dist: &DesignDistribution, seed: u64) -> Result<DMatrix<f64>> {
    dist.sample(n, p, &mut from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{expand_design, Expansion};
    use crate::linalg::{sample_covariance, symmetric_eigenvalues};

    #[test]
    fn gaussian_identity_covariance_concentrates() {
        let n = 100_000;
        let x = gen_design(n, 5, &DesignDistribution::default(), 3).unwrap();
        let diff = sample_covariance(&x) - DMatrix::<f64>::identity(5, 5);
        let op = symmetric_eigenvalues(&diff).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(op < 5.0 / (n as f64).sqrt(), "{op}");
    }

    #[test]
    fn rademacher_entries_are_signs_and_seeded() {
        let dist = DesignDistribution { kind: Marginal::Rademacher, covariance: Covariance::Identity };
        let x = gen_design(50, 4, &dist, 9).unwrap();
        assert!(x.iter().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(x, gen_design(50, 4, &dist, 9).unwrap());
        assert_ne!(x, gen_design(50, 4, &dist, 10).unwrap());
    }

    #[test]
    fn invalid_covariances_are_rejected() {
        let ar = DesignDistribution::gaussian(Covariance::Ar1 { rho: 1.0 });
        assert!(gen_design(10, 3, &ar, 0).is_err());
        let singular = DesignDistribution::gaussian(Covariance::Toeplitz { first_row: vec![1.0, 1.0] });
        assert!(gen_design(10, 2, &singular, 0).is_err());
        assert!(gen_design(0, 2, &DesignDistribution::default(), 0).is_err());
    }

    #[test]
    fn analytic_column_variances_match_monte_carlo() {
        for kind in [Marginal::Gaussian, Marginal::Rademacher, Marginal::UniformScaled] {
            let dist = DesignDistribution { kind, covariance: Covariance::Ar1 { rho: 0.6 } };
            let x = gen_design(200_000, 3, &dist, 1).unwrap();
            let z = expand_design(&x, Expansion::raw()).unwrap();
            let cov = sample_covariance(z.values());
            for (j, v) in dist.column_variances(3).unwrap().iter().enumerate() {
                assert!((cov[(j, j)] - v).abs() < 0.05 * v, "{kind:?} column {j}: {} vs {v}", cov[(j, j)]);
            }
        }
        assert_eq!(DesignDistribution::default().h0(6).unwrap(), 1.0);
    }

    #[test]
    fn covariance_strings() {
        assert_eq!("identity".parse::<Covariance>().unwrap(), Covariance::Identity);
        assert_eq!("ar1:0.5".parse::<Covariance>().unwrap(), Covariance::Ar1 { rho: 0.5 });
        assert_eq!("toeplitz:1,0.5".parse::<Covariance>().unwrap(), Covariance::Toeplitz { first_row: vec![1.0, 0.5] });
        for bad in ["ar1", "ar1:0.1,0.2", "toeplitz:a", "identity:1", "wishart"] {
            assert!(bad.parse::<Covariance>().is_err(), "{bad}");
        }
    }

    #[test]
    fn serde_shape() {
        let d = DesignDistribution { kind: Marginal::UniformScaled, covariance: Covariance::Ar1 { rho: 0.5 } };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"kind":"uniform_scaled","covariance":{"type":"ar1","rho":0.5}}"#);
        let back: DesignDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
