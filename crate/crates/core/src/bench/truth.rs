//! Hierarchical sparse coefficient vectors.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::design::InteractionIndex;
use crate::error::{Error, Result};
use crate::rng::{from_seed, BenchRng};
use crate::support::SupportSet;

/// Truth `beta` with `s_main` main effects chosen uniformly and `s_int`
/// pairs chosen uniformly among the pairs inside them, all entries
/// `+-magnitude` with random signs.
pub fn gen_truth(p: usize, s_main: usize, s_int: usize, magnitude: f64, seed: u64) -> Result<(Vec<f64>, SupportSet)> {
    draw_truth(p, s_main, s_int, magnitude, &mut from_seed(seed))
}

pub fn draw_truth(
    p: usize,
    s_main: usize,
    s_int: usize,
    magnitude: f64,
    rng: &mut BenchRng,
) -> Result<(Vec<f64>, SupportSet)> {
    let idx = InteractionIndex::new(p)?;
    if s_main > p {
        return Err(Error::domain(format!("s_main = {s_main} exceeds p = {p}")));
    }
    let available = s_main * s_main.saturating_sub(1) / 2;
    if s_int > available {
        return Err(Error::domain(format!(
            "s_int = {s_int} is infeasible: only {available} pairs lie inside {s_main} main effects"
        )));
    }
    if !(magnitude >= 0.0) || !magnitude.is_finite() {
        return Err(Error::domain("truth magnitude must be finite and nonnegative"));
    }
    let mut main: Vec<usize> = sample(rng, p, s_main).into_vec();
    main.sort_unstable();
    let inner: Vec<(usize, usize)> =
        (0..s_main).flat_map(|a| (a + 1..s_main).map(move |b| (a, b))).map(|(a, b)| (main[a], main[b])).collect();
    let pairs: BTreeSet<(usize, usize)> = sample(rng, inner.len(), s_int).into_iter().map(|i| inner[i]).collect();

    let mut beta = vec![0.0; idx.p1()];
    let sign = |rng: &mut BenchRng| if rng.random::<bool>() { magnitude } else { -magnitude };
    for &j in &main {
        beta[j] = sign(rng);
    }
    for &(j, k) in &pairs {
        beta[idx.pair_to_column(j, k)?] = sign(rng);
    }
    if magnitude == 0.0 {
        return Ok((beta, SupportSet::empty()));
    }
    let support = SupportSet::new(main, pairs)?;
    Ok((beta, support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::hierarchy_check;
    use proptest::prelude::*;

    #[test]
    fn two_mains_force_their_pair() {
        let (beta, s) = gen_truth(5, 2, 1, 1.0, 4).unwrap();
        assert_eq!(s.len(), 3);
        let (&a, &b) = (s.main().first().unwrap(), s.main().last().unwrap());
        assert!(s.pairs().contains(&(a, b)));
        assert_eq!(beta.iter().filter(|v| **v != 0.0).count(), 3);
        assert!(beta.iter().all(|v| v.abs() == 1.0 || *v == 0.0));
    }

    #[test]
    fn degenerate_cases() {
        let (beta, s) = gen_truth(6, 3, 0, 2.0, 1).unwrap();
        assert!(s.pairs().is_empty());
        assert!(beta[6..].iter().all(|v| *v == 0.0));
        let (beta, s) = gen_truth(6, 3, 2, 0.0, 1).unwrap();
        assert!(s.is_empty());
        assert!(beta.iter().all(|v| *v == 0.0));
        assert!(gen_truth(6, 2, 2, 1.0, 1).is_err());
        assert!(gen_truth(3, 4, 0, 1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn truths_are_hierarchical(p in 2usize..12, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let s_main = 1 + (frac * (p - 1) as f64) as usize;
            let s_int = s_main * (s_main - 1) / 4;
            let (beta, s) = gen_truth(p, s_main, s_int, 1.5, seed).unwrap();
            prop_assert!(hierarchy_check(&s));
            prop_assert_eq!(s.len(), s_main + s_int);
            let idx = InteractionIndex::new(p).unwrap();
            prop_assert_eq!(s.columns(idx).unwrap().len(), beta.iter().filter(|v| **v != 0.0).count());
        }
    }
}
