//! Choice of the regularization level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants entering the noise-correlation threshold
/// `C_{e,delta} = sqrt((1 + eta0) / c) * Ke * h0 * (1 + delta)`.
///
/// `c` is an unspecified absolute constant; every quantity derived from it
/// is only meaningful up to that constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConstants {
    /// psi_2 norm of the noise.
    pub ke: f64,
    /// psi_2 norm of the design rows.
    pub kx: f64,
    /// Upper bound on the column standard deviations of the design.
    pub h0: f64,
    pub delta: f64,
    pub eta0: f64,
    pub c: f64,
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self { ke: 1.0, kx: 1.0, h0: 1.0, delta: 0.5, eta0: 1.0, c: 1.0 }
    }
}

impl TheoryConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.ke, self.kx, self.h0, self.delta, self.eta0, self.c];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("theory constants must be positive and finite"));
        }
        if self.delta > 1.0 {
            return Err(Error::domain("delta must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn c_e_delta(&self) -> f64 {
        ((1.0 + self.eta0) / self.c).sqrt() * self.ke * self.h0 * (1.0 + self.delta)
    }
}

/// `C_{e,delta} * sqrt(ln p1 / n)`.
pub fn lambda_theory(n: usize, p1: usize, tc: &TheoryConstants) -> Result<f64> {
    tc.validate()?;
    if n < 2 || p1 < 2 {
        return Err(Error::domain("lambda_theory needs n >= 2 and p1 >= 2"));
    }
    Ok(tc.c_e_delta() * ((p1 as f64).ln() / n as f64).sqrt())
}

/// Lower bound on the probability of the noise event,
/// `q1n * q2n = (1 - 2 exp(-C_K (n delta)^(1/3) + ln p1)) * (1 - p1^(-eta0))`,
/// clamped to `[0, 1]`. `ck` is unspecified; results hold up to constants.
pub fn noise_event_lower_bound(n: usize, p1: usize, delta: f64, eta0: f64, ck: f64) -> f64 {
    let p1 = p1 as f64;
    let q1 = 1.0 - 2.0 * (-ck * (n as f64 * delta).cbrt() + p1.ln()).exp();
    let q2 = 1.0 - p1.powf(-eta0);
    (q1.clamp(0.0, 1.0) * q2.clamp(0.0, 1.0)).clamp(0.0, 1.0)
}

/// How a fit picks lambda.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    Fixed {
        value: f64,
    },
    /// `multiplier * lambda_theory(n, p1, constants)`.
    Theory {
        #[serde(default = "default_multiplier")]
        multiplier: f64,
        #[serde(default)]
        constants: TheoryConstants,
    },
}

fn default_multiplier() -> f64 {
    2.0
}

impl LambdaRule {
    pub fn resolve(&self, n: usize, p1: usize) -> Result<f64> {
        match *self {
            LambdaRule::Fixed { value } if value > 0.0 && value.is_finite() => Ok(value),
            LambdaRule::Fixed { value } => Err(Error::domain(format!("lambda must be positive, got {value}"))),
            LambdaRule::Theory { multiplier, constants } => {
                if !(multiplier > 0.0) {
                    return Err(Error::domain("lambda multiplier must be positive"));
                }
                Ok(multiplier * lambda_theory(n, p1, &constants)?)
            }
        }
    }
}
