//! Randomized sweep of the sandwich inequalities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{a3_constants, check_a3, evaluate, A3Constants, A3Slacks, PenaltySpec};
use crate::design::InteractionIndex;
use crate::error::{Error, Result};
use crate::rng::{stream, BenchRng};
use crate::support::SupportSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3TrialSummary {
    pub penalty: String,
    pub p: usize,
    pub constants: A3Constants,
    pub trials: usize,
    /// Trials with `Pe(0) = 0`.
    pub zero: usize,
    pub subadditive: usize,
    pub lower: usize,
    pub upper: usize,
    /// Trials passing every check.
    pub passed: usize,
    /// Smallest slack seen for each inequality.
    pub worst: A3Slacks,
}

impl A3TrialSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Random hierarchical support: each main effect kept with probability
/// 1/2, each pair inside the kept set with probability 1/2.
pub fn random_hierarchical_support(p: usize, rng: &mut BenchRng) -> SupportSet {
    let main: Vec<usize> = (0..p).filter(|_| rng.random::<bool>()).collect();
    let mut pairs = Vec::new();
    for (a, &j) in main.iter().enumerate() {
        for &k in &main[a + 1..] {
            if rng.random::<bool>() {
                pairs.push((j, k));
            }
        }
    }
    SupportSet::new(main, pairs).expect("pairs are ordered")
}

/// Gaussian vector with roughly a third of its entries zeroed and a random
/// overall scale.
pub fn random_coefficients(p1: usize, rng: &mut BenchRng) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    (0..p1)
        .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { scale * rng.sample::<f64, _>(StandardNormal) })
        .collect()
}

pub fn a3_trials(spec: &PenaltySpec, p: usize, trials: usize, seed: u64) -> Result<A3TrialSummary> {
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    let idx = InteractionIndex::new(p)?;
    spec.bind(idx)?;
    let zero_value = evaluate(spec, &vec![0.0; idx.p1()], idx)?;
    let mut out = A3TrialSummary {
        penalty: spec.to_string(),
        p,
        constants: a3_constants(spec, p),
        trials,
        zero: 0,
        subadditive: 0,
        lower: 0,
        upper: 0,
        passed: 0,
        worst: A3Slacks { subadditive: f64::INFINITY, lower: f64::INFINITY, upper: f64::INFINITY },
    };
    for t in 0..trials {
        let mut rng = stream(seed, p as u64, t as u64);
        let support = random_hierarchical_support(p, &mut rng);
        let theta = random_coefficients(idx.p1(), &mut rng);
        let split = random_coefficients(idx.p1(), &mut rng);
        let check = check_a3(spec, idx, &theta, &support, Some(&split))?;
        let zero = zero_value == 0.0;
        out.zero += usize::from(zero);
        out.subadditive += usize::from(check.subadditive);
        out.lower += usize::from(check.lower);
        out.upper += usize::from(check.upper);
        out.passed += usize::from(zero && check.all());
        out.worst.subadditive = out.worst.subadditive.min(check.slacks.subadditive);
        out.worst.lower = out.worst.lower.min(check.slacks.lower);
        out.worst.upper = out.worst.upper.min(check.slacks.upper);
    }
    Ok(out)
}
