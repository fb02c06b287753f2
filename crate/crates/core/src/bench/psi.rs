//! Orlicz-type norms estimated from moment growth:
//! `psi_2 = sup_q q^-1/2 (E|V|^q)^(1/q)`, `psi_1 = sup_q q^-1 (E|V|^q)^(1/q)`,
//! with the supremum truncated to integer `q <= qmax`. The truncation
//! biases the estimate downward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    Psi1,
    Psi2,
}

pub fn psi_norm_estimate(samples: &[f64], kind: PsiKind, qmax: u32) -> Result<f64> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::domain(format!("psi-norm estimates need at least {MIN_SAMPLES} samples")));
    }
    if qmax < 2 {
        return Err(Error::domain("qmax must be at least 2"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite sample"));
    }
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    let mut best = 0.0f64;
    for q in 1..=qmax {
        let qf = f64::from(q);
        let moment = samples.iter().map(|v| (v.abs() / scale).powi(q as i32)).sum::<f64>() / n;
        let root = scale * moment.powf(1.0 / qf);
        let weight = match kind {
            PsiKind::Psi1 => 1.0 / qf,
            PsiKind::Psi2 => qf.sqrt().recip(),
        };
        best = best.max(weight * root);
    }
    Ok(best)
}
