//! Additive decomposition of a penalty into weighted norm atoms.
//!
//! `Pe(theta) = sum_a weight_a * norm_a(theta[indices_a])`. An index may
//! occur more than once inside one atom (the block family concatenates the
//! interaction rows of neighbouring variables, which share entries); the
//! splitting solver gives every occurrence its own latent copy.
//!
//! Separable `l1` pieces are merged per column and regrouped by weight, so
//! e.g. the block family with `d0 = 1` yields exactly the CAP atoms.

use serde::{Deserialize, Serialize};

use super::{lq_norm, Exponent, PenaltySpec};
use crate::design::InteractionIndex;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    L1,
    Lq {
        q: Exponent,
    },
    /// `max(|x_0|, ||x_{1..}||_1)`: the first entry is a main effect, the rest
    /// its interactions.
    MaxAbsL1,
}

impl NormKind {
    pub fn norm(&self, x: &[f64]) -> f64 {
        match *self {
            NormKind::L1 => x.iter().map(|v| v.abs()).sum(),
            NormKind::Lq { q } => lq_norm(x.iter().copied(), q),
            NormKind::MaxAbsL1 => match x.split_first() {
                Some((head, rest)) => head.abs().max(rest.iter().map(|v| v.abs()).sum()),
                None => 0.0,
            },
        }
    }

    /// Dual norm, `sup { <x, y> : norm(x) <= 1 }`.
    pub fn dual_norm(&self, y: &[f64]) -> f64 {
        match *self {
            NormKind::L1 => y.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::Lq { q } => {
                let r = q.dual();
                if r == 1.0 {
                    y.iter().map(|v| v.abs()).sum()
                } else {
                    let e = if r.is_infinite() { Exponent::INFINITY } else { Exponent(r) };
                    lq_norm(y.iter().copied(), e)
                }
            }
            NormKind::MaxAbsL1 => match y.split_first() {
                Some((head, rest)) => head.abs() + rest.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                None => 0.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub indices: Vec<usize>,
    pub weight: f64,
    pub kind: NormKind,
}

impl Atom {
    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        let vals: Vec<f64> = self.indices.iter().map(|&i| theta[i]).collect();
        self.weight * self.kind.norm(&vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomList {
    pub atoms: Vec<Atom>,
    pub p1: usize,
}

impl AtomList {
    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        self.atoms.iter().map(|a| a.evaluate(theta)).sum()
    }

    /// Total number of latent copies, counting repeats.
    pub fn total_len(&self) -> usize {
        self.atoms.iter().map(|a| a.indices.len()).sum()
    }

    /// How many copies each column has across all atoms.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut counts = vec![0; self.p1];
        for a in &self.atoms {
            for &i in &a.indices {
                counts[i] += 1;
            }
        }
        counts
    }
}

/// Atom decomposition of `spec` for the design described by `idx`.
pub fn atoms(spec: &PenaltySpec, idx: InteractionIndex) -> Result<AtomList> {
    if idx.p() < 2 {
        return Err(Error::domain("penalties need p >= 2"));
    }
    spec.bind(idx)?;
    let p = idx.p();
    let row = |j: usize| -> Vec<usize> { idx.interactions_of(j).collect() };
    let group = |j: usize| -> Vec<usize> {
        let mut g = vec![j];
        g.extend(idx.interactions_of(j));
        g
    };
    let mut list = Vec::new();
    // per-column weight of the separable l1 part
    let mut l1 = vec![0.0; idx.p1()];

    match *spec {
        PenaltySpec::Lasso => l1.iter_mut().for_each(|w| *w = 1.0),
        PenaltySpec::Cap { q } => {
            for j in 0..p {
                list.push(Atom { indices: group(j), weight: 1.0, kind: NormKind::Lq { q } });
            }
            idx.interaction_columns().for_each(|c| l1[c] += 1.0);
        }
        PenaltySpec::BienMaxL1 => {
            for j in 0..p {
                list.push(Atom { indices: group(j), weight: 1.0, kind: NormKind::MaxAbsL1 });
            }
            idx.interaction_columns().for_each(|c| l1[c] += 1.0);
        }
        PenaltySpec::PairwiseGroup { q } => {
            let w = 1.0 / (p as f64 - 1.0);
            for (j, k) in idx.pairs() {
                let c = idx.pair_column_unchecked(j, k);
                list.push(Atom { indices: vec![j, c], weight: w, kind: NormKind::Lq { q } });
                list.push(Atom { indices: vec![k, c], weight: w, kind: NormKind::Lq { q } });
            }
            idx.interaction_columns().for_each(|c| l1[c] += 1.0);
        }
        PenaltySpec::ContiguousBlock { q, d0 } => {
            for j in d0 - 1..p {
                let block = j + 1 - d0..=j;
                let h: Vec<usize> = block.clone().flat_map(row).collect();
                let mut g: Vec<usize> = block.collect();
                g.extend(&h);
                list.push(Atom { indices: g, weight: 1.0, kind: NormKind::Lq { q } });
                h.iter().for_each(|&c| l1[c] += 0.5);
            }
        }
        PenaltySpec::Nested { q } => {
            for j in 0..p {
                let earlier: Vec<usize> = (0..j).map(|k| idx.pair_column_unchecked(k, j)).collect();
                let mut g = vec![j];
                g.extend(&earlier);
                list.push(Atom { indices: g, weight: 1.0, kind: NormKind::Lq { q } });
                earlier.iter().for_each(|&c| l1[c] += 1.0);
            }
        }
    }

    // regroup the separable part by weight, in order of first appearance
    let mut weights: Vec<f64> = Vec::new();
    for &w in l1.iter().filter(|&&w| w > 0.0) {
        if !weights.contains(&w) {
            weights.push(w);
        }
    }
    for w in weights {
        let indices: Vec<usize> = (0..idx.p1()).filter(|&c| l1[c] == w).collect();
        list.push(Atom { indices, weight: w, kind: NormKind::L1 });
    }
    Ok(AtomList { atoms: list, p1: idx.p1() })
}
