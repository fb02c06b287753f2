//! Sample size sufficient for the restricted eigenvalue condition on a
//! random design, evaluated from its closed form. All constants are
//! unspecified in the bound and default to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSizeConstants {
    pub c1: f64,
    pub big_c1: f64,
    /// `C~_K`.
    pub ck_tilde: f64,
}

impl Default for SampleSizeConstants {
    fn default() -> Self {
        Self { c1: 1.0, big_c1: 1.0, ck_tilde: 1.0 }
    }
}

/// `m1 = 16 s (1 + k0)^2`.
pub fn m1(s: usize, k0: f64) -> f64 {
    16.0 * s as f64 * (1.0 + k0).powi(2)
}

/// `eps^-1 max{C1, (c1 m1 ln(c1 m1 p1) / C~_K)^3, (c1 m1 ln(4 c1 m1 p1) / (4 C~_K))^3}`.
///
/// The admissible range of `eps` depends on population eigenvalues of
/// `Sigma_z` and is the caller's responsibility.
pub fn re_sample_size(s: usize, k0: f64, p1: usize, eps: f64, k: &SampleSizeConstants) -> Result<f64> {
    let positive = [k0, eps, k.c1, k.big_c1, k.ck_tilde];
    if s == 0 || p1 == 0 || positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("sample-size constants must be positive"));
    }
    let cm = k.c1 * m1(s, k0);
    let p1 = p1 as f64;
    let a = (cm / k.ck_tilde * (cm * p1).ln()).powi(3);
    let b = (0.25 / k.ck_tilde * cm * (4.0 * cm * p1).ln()).powi(3);
    Ok(k.big_c1.max(a).max(b) / eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert_eq!(m1(1, 7.0), 1024.0);
        let k = SampleSizeConstants::default();
        let n = re_sample_size(1, 7.0, 10, 0.1, &k).unwrap();
        // (1024 ln 10240)^3 / 0.1
        let expect = (1024.0 * 10240f64.ln()).powi(3) / 0.1;
        assert!((n / expect - 1.0).abs() < 1e-12);
        assert!((n / 8.45e12 - 1.0).abs() < 0.01, "{n:e}");
        let half = re_sample_size(1, 7.0, 10, 0.05, &k).unwrap();
        assert!((half / n - 2.0).abs() < 1e-12);
        assert!(re_sample_size(1, 7.0, 10, 0.0, &k).is_err());
    }
}
