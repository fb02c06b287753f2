//! Tail frequencies of `|n^-1 sum Z_i^2 - var Z| > delta` for a centered
//! scalar `Z`, and their decay in `(n delta)^(1/3)`.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fit_line, LineFit};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarDistribution {
    /// `E - 1` with `E ~ Exponential(1)`.
    #[default]
    CenteredExponential,
    Gaussian,
    /// Difference of two independent `Exponential(1)` draws, scaled to unit
    /// variance.
    Laplace,
}

impl ScalarDistribution {
    pub fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            ScalarDistribution::CenteredExponential => rng.sample::<f64, _>(Exp1) - 1.0,
            ScalarDistribution::Gaussian => rng.sample(StandardNormal),
            ScalarDistribution::Laplace => (rng.sample::<f64, _>(Exp1) - rng.sample::<f64, _>(Exp1)) / 2f64.sqrt(),
        }
    }

    /// All three have unit variance.
    pub fn variance(self) -> f64 {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub exceedances: usize,
    pub trials: usize,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub distribution: ScalarDistribution,
    pub delta: f64,
    pub rows: Vec<ConcentrationRow>,
    /// `ln((k + 1/2) / (trials + 1))` against `(n delta)^(1/3)`; the
    /// continuity correction keeps zero counts finite.
    pub fit: Option<LineFit>,
}

impl ConcentrationReport {
    pub fn nonincreasing(&self, std_errors: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let slack = std_errors * w[0].std_error.max(w[1].std_error);
            w[1].frequency <= w[0].frequency + slack
        })
    }
}

pub fn concentration_squares_check(
    dist: ScalarDistribution,
    n_list: &[usize],
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain("delta must be positive"));
    }
    if trials == 0 || n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::domain("need trials >= 1 and a nonempty list of positive n"));
    }
    let var = dist.variance();
    let rows: Vec<ConcentrationRow> = n_list
        .iter()
        .enumerate()
        .map(|(cell, &n)| {
            let exceedances = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let mut rng = stream(seed, cell as u64, t as u64);
                    let mean_sq = (0..n).map(|_| dist.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
                    (mean_sq - var).abs() > delta
                })
                .count();
            let frequency = exceedances as f64 / trials as f64;
            ConcentrationRow {
                n,
                exceedances,
                trials,
                frequency,
                std_error: (frequency * (1.0 - frequency) / trials as f64).sqrt(),
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64 * delta).cbrt()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| ((r.exceedances as f64 + 0.5) / (r.trials as f64 + 1.0)).ln()).collect();
    let fit = fit_line(&xs, &ys).ok();
    Ok(ConcentrationReport { distribution: dist, delta, rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_tails_decay() {
        let r =
            concentration_squares_check(ScalarDistribution::CenteredExponential, &[100, 1_000, 10_000], 0.5, 2000, 1)
                .unwrap();
        assert!(r.rows[2].frequency < 0.01);
        assert!(r.rows.windows(2).all(|w| w[1].frequency <= w[0].frequency), "{r:?}");
        assert!(r.fit.unwrap().slope < 0.0);
        assert!(r.nonincreasing(2.0));
    }

    #[test]
    fn other_distributions_are_unit_variance() {
        for d in [ScalarDistribution::Gaussian, ScalarDistribution::Laplace, ScalarDistribution::CenteredExponential] {
            let r = concentration_squares_check(d, &[200_000], 0.05, 1, 3).unwrap();
            assert_eq!(r.rows[0].exceedances, 0, "{d:?}");
        }
        assert!(concentration_squares_check(ScalarDistribution::Gaussian, &[10], 0.0, 5, 1).is_err());
    }
}
