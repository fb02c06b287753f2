//! Hierarchy-respecting penalty families.
//!
//! Every family is a norm on the `p1` coefficients built from groups of a
//! main effect with its interactions plus an `l1` term on the interactions.
//! [`evaluate`] computes each family from its defining formula;
//! [`atoms`](atoms::atoms) gives the additive decomposition used by the
//! solver, and [`prox`](prox::prox) the proximal operators of the atoms.

pub mod atoms;
pub mod prox;
pub mod trials;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::design::InteractionIndex;
use crate::error::{Error, Result};
use crate::support::SupportSet;

pub use atoms::{atoms, Atom, AtomList, NormKind};
pub use prox::prox;
pub use trials::{a3_trials, A3TrialSummary};

/// Absolute tolerance used by every penalty identity check.
pub const ABS_TOL: f64 = 1e-9;
/// Relative tolerance added on top of [`ABS_TOL`].
pub const REL_TOL: f64 = 1e-10;

/// Exponent `q > 1` of a group norm; `q = inf` is allowed.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q <= 1.0 {
            return Err(Error::domain(format!("group exponent must satisfy q > 1, got {q}")));
        }
        Ok(Self(q))
    }

    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hoelder conjugate `q / (q - 1)`; `1` for `q = inf`.
    pub fn dual(self) -> f64 {
        if self.0.is_infinite() {
            1.0
        } else {
            self.0 / (self.0 - 1.0)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Self::INFINITY);
        }
        let q: f64 = s.parse().map_err(|_| Error::domain(format!("cannot parse exponent {s:?}")))?;
        Self::new(q)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(q) => Exponent::new(q).map_err(D::Error::custom),
            Raw::Text(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

/// One of the six penalty families, with its parameters.
///
/// JSON form: `{"family": "block", "q": 2.0, "d0": 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    /// Plain `||theta||_1`.
    Lasso,
    /// Composite absolute penalty: `sum_j ||(theta_j, T_j)||_q + sum_{j<k} |theta_jk|`.
    Cap { q: Exponent },
    /// `sum_j max(|theta_j|, ||T_j||_1) + sum_{j<k} |theta_jk|`.
    #[serde(rename = "bien")]
    BienMaxL1,
    /// Pairwise groups `(theta_j, theta_jk)` and `(theta_k, theta_jk)` with
    /// weight `1/(p-1)`, plus the interaction `l1` term.
    #[serde(rename = "pairwise")]
    PairwiseGroup { q: Exponent },
    /// Groups of `d0` contiguous main effects with all their interactions,
    /// plus half the `l1` norm of the interaction part of each group.
    #[serde(rename = "block")]
    ContiguousBlock { q: Exponent, d0: usize },
    /// Each main effect grouped with its interactions with earlier variables,
    /// plus the `l1` norm of those interactions.
    Nested { q: Exponent },
}

impl PenaltySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltySpec::Lasso => "lasso",
            PenaltySpec::Cap { .. } => "cap",
            PenaltySpec::BienMaxL1 => "bien",
            PenaltySpec::PairwiseGroup { .. } => "pairwise",
            PenaltySpec::ContiguousBlock { .. } => "block",
            PenaltySpec::Nested { .. } => "nested",
        }
    }

    pub fn exponent(&self) -> Option<Exponent> {
        match *self {
            PenaltySpec::Cap { q }
            | PenaltySpec::PairwiseGroup { q }
            | PenaltySpec::ContiguousBlock { q, .. }
            | PenaltySpec::Nested { q } => Some(q),
            PenaltySpec::Lasso | PenaltySpec::BienMaxL1 => None,
        }
    }

    /// Check parameters that depend on the number of main effects.
    pub fn bind(&self, idx: InteractionIndex) -> Result<()> {
        if let PenaltySpec::ContiguousBlock { d0, .. } = *self {
            if d0 == 0 || d0 > idx.p() {
                return Err(Error::domain(format!("block length d0 = {d0} must lie in 1..={}", idx.p())));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltySpec::Lasso | PenaltySpec::BienMaxL1 => f.write_str(self.name()),
            PenaltySpec::ContiguousBlock { q, d0 } => write!(f, "block:q={q},d0={d0}"),
            PenaltySpec::Cap { q } | PenaltySpec::PairwiseGroup { q } | PenaltySpec::Nested { q } => {
                write!(f, "{}:q={q}", self.name())
            }
        }
    }
}

/// Parses the CLI form `family[:key=value,...]`, e.g. `cap:q=2`,
/// `block:q=2,d0=3`, `bien`. A missing `q` defaults to 2.
impl FromStr for PenaltySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = match s.split_once(':') {
            Some((f, rest)) => (f.trim(), rest),
            None => (s.trim(), ""),
        };
        let mut q = None;
        let mut d0 = None;
        for kv in params.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::domain(format!("expected key=value, got {kv:?}")))?;
            match k.trim() {
                "q" => q = Some(v.parse::<Exponent>()?),
                "d0" => d0 = Some(v.trim().parse::<usize>().map_err(|_| Error::domain(format!("bad d0 {v:?}")))?),
                other => return Err(Error::domain(format!("unknown penalty parameter {other:?}"))),
            }
        }
        let q = q.unwrap_or(Exponent::TWO);
        let spec = match family.to_ascii_lowercase().as_str() {
            "lasso" | "l1" => PenaltySpec::Lasso,
            "cap" | "vanish" => PenaltySpec::Cap { q },
            "bien" | "hiernet" => PenaltySpec::BienMaxL1,
            "pairwise" => PenaltySpec::PairwiseGroup { q },
            "block" => {
                PenaltySpec::ContiguousBlock { q, d0: d0.ok_or_else(|| Error::domain("block penalty needs d0"))? }
            }
            "nested" => PenaltySpec::Nested { q },
            other => return Err(Error::domain(format!("unknown penalty family {other:?}"))),
        };
        if d0.is_some() && !matches!(spec, PenaltySpec::ContiguousBlock { .. }) {
            return Err(Error::domain("d0 only applies to the block penalty"));
        }
        Ok(spec)
    }
}

pub(crate) fn lq_norm(values: impl Iterator<Item = f64> + Clone, q: Exponent) -> f64 {
    if q.is_infinite() {
        return values.fold(0.0, |m, v| m.max(v.abs()));
    }
    if q.get() == 2.0 {
        return values.map(|v| v * v).sum::<f64>().sqrt();
    }
    let scale = values.clone().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let q = q.get();
    scale * values.map(|v| (v.abs() / scale).powf(q)).sum::<f64>().powf(1.0 / q)
}

pub(crate) fn l1_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).sum()
}

/// `Pe(theta)` evaluated from the family's defining formula.
pub fn evaluate(spec: &PenaltySpec, theta: &[f64], idx: InteractionIndex) -> Result<f64> {
    if theta.len() != idx.p1() {
        return Err(Error::domain(format!(
            "coefficient vector has length {}, expected p1 = {}",
            theta.len(),
            idx.p1()
        )));
    }
    spec.bind(idx)?;
    let p = idx.p();
    let at = |c: usize| theta[c];
    let interaction_l1: f64 = theta[p..].iter().map(|v| v.abs()).sum();
    let row = |j: usize| -> Vec<f64> { idx.interactions_of(j).map(at).collect() };

    Ok(match *spec {
        PenaltySpec::Lasso => l1_norm(theta),
        PenaltySpec::Cap { q } => {
            let groups: f64 = (0..p).map(|j| lq_norm(std::iter::once(theta[j]).chain(row(j)), q)).sum();
            groups + interaction_l1
        }
        PenaltySpec::BienMaxL1 => {
            let groups: f64 = (0..p).map(|j| theta[j].abs().max(l1_norm(&row(j)))).sum();
            groups + interaction_l1
        }
        PenaltySpec::PairwiseGroup { q } => {
            let mut groups = 0.0;
            for (j, k) in idx.pairs() {
                let t = theta[idx.pair_column_unchecked(j, k)];
                groups += lq_norm([theta[j], t].into_iter(), q) + lq_norm([theta[k], t].into_iter(), q);
            }
            groups / (p as f64 - 1.0) + interaction_l1
        }
        PenaltySpec::ContiguousBlock { q, d0 } => {
            let mut total = 0.0;
            for j in d0 - 1..p {
                let block = j + 1 - d0..=j;
                let mains = block.clone().map(at);
                let h: Vec<f64> = block.clone().flat_map(row).collect();
                total += lq_norm(mains.chain(h.iter().copied()), q) + 0.5 * l1_norm(&h);
            }
            total
        }
        PenaltySpec::Nested { q } => {
            let mut total = 0.0;
            for (j, &main) in theta.iter().enumerate().take(p) {
                let earlier = (0..j).map(|k| at(idx.pair_column_unchecked(k, j)));
                total += lq_norm(std::iter::once(main).chain(earlier.clone()), q) + earlier.map(f64::abs).sum::<f64>();
            }
            total
        }
    })
}

/// Sandwich constants `(L1, L2)`: `Pe(theta) >= Pe(theta_S) + L1 ||theta_Sc||_1`
/// and `Pe(theta_S) <= L2 ||theta_S||_1` for hierarchical `S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Constants {
    pub l1: f64,
    pub l2: f64,
}

impl A3Constants {
    /// Cone constant `k0 = (2 L2 + 1) / (2 L1 - 1)` of the restricted
    /// eigenvalue condition the rate needs.
    pub fn cone_constant(&self) -> f64 {
        (2.0 * self.l2 + 1.0) / (2.0 * self.l1 - 1.0)
    }

    /// Rate factor `D(s) = (L2 + L1)^2 s / ((2 L1 - 1) M^2)` for a restricted
    /// eigenvalue `m = M(k0, s)`; `16 s / M^2` when `(L1, L2) = (1, 3)`.
    pub fn rate_factor(&self, s: usize, m: f64) -> f64 {
        (self.l2 + self.l1).powi(2) * s as f64 / ((2.0 * self.l1 - 1.0) * m * m)
    }
}

/// Declared `(L1, L2)` for each family. Assumes `p >= 2`.
///
/// The pairwise family's upper constant is `1 + 2/(p-1)`: a support holding
/// only an interaction `(j,k)` with zero main coefficients gives
/// `Pe(theta_S) = (1 + 2/(p-1)) |theta_jk|`, so `1 + 1/(p-1)` is too small.
///
/// For the block family with `d0 >= 2` the lower inequality with `L1 = 1`
/// does not hold for every hierarchical `S`: a group mixing supported and
/// unsupported main effects is charged less than their `l1` split, because
/// `||(a, b)||_q < |a| + |b|`. `(1, 3 d0)` is reported as declared;
/// [`check_a3`] exposes the violations.
pub fn a3_constants(spec: &PenaltySpec, p: usize) -> A3Constants {
    let p = p.max(2) as f64;
    let (l1, l2) = match *spec {
        PenaltySpec::Lasso => (1.0, 1.0),
        PenaltySpec::Cap { .. } | PenaltySpec::BienMaxL1 => (1.0, 3.0),
        PenaltySpec::PairwiseGroup { .. } => (1.0, 1.0 + 2.0 / (p - 1.0)),
        PenaltySpec::ContiguousBlock { d0, .. } => (1.0, 3.0 * d0 as f64),
        PenaltySpec::Nested { .. } => (1.0, 2.0),
    };
    A3Constants { l1, l2 }
}

/// Margins of the three inequalities; nonnegative means satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Slacks {
    /// `Pe(theta1) + Pe(theta2) - Pe(theta1 + theta2)`.
    pub subadditive: f64,
    /// `Pe(theta) - Pe(theta_S) - L1 ||theta_Sc||_1`.
    pub lower: f64,
    /// `L2 ||theta_S||_1 - Pe(theta_S)`.
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Check {
    pub subadditive: bool,
    pub lower: bool,
    pub upper: bool,
    pub slacks: A3Slacks,
}

impl A3Check {
    pub fn all(&self) -> bool {
        self.subadditive && self.lower && self.upper
    }
}

pub(crate) fn tolerance(scale: f64) -> f64 {
    ABS_TOL + REL_TOL * scale.abs()
}

/// Check subadditivity and the sandwich inequalities at `theta` for a
/// hierarchical support `S`.
///
/// Subadditivity is checked on the split `theta = theta1 + (theta - theta1)`
/// with `theta1 = split`, or `theta1 = theta_S` when no split is supplied.
pub fn check_a3(
    spec: &PenaltySpec,
    idx: InteractionIndex,
    theta: &[f64],
    support: &SupportSet,
    split: Option<&[f64]>,
) -> Result<A3Check> {
    if !support.is_hierarchical() {
        return Err(Error::domain("the sandwich inequalities are only defined for hierarchical supports"));
    }
    let mask = support.mask(idx)?;
    let pe = evaluate(spec, theta, idx)?;
    let theta_s: Vec<f64> = theta.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
    let pe_s = evaluate(spec, &theta_s, idx)?;
    let off_l1: f64 = theta.iter().zip(&mask).filter(|(_, &m)| !m).map(|(v, _)| v.abs()).sum();
    let on_l1 = l1_norm(&theta_s);
    let c = a3_constants(spec, idx.p());

    let first: Vec<f64> = match split {
        Some(s) if s.len() != theta.len() => {
            return Err(Error::domain("split has the wrong length"));
        }
        Some(s) => s.to_vec(),
        None => theta_s.clone(),
    };
    let second: Vec<f64> = theta.iter().zip(&first).map(|(t, a)| t - a).collect();
    let pe_first = evaluate(spec, &first, idx)?;
    let pe_second = evaluate(spec, &second, idx)?;

    let slacks = A3Slacks {
        subadditive: pe_first + pe_second - pe,
        lower: pe - pe_s - c.l1 * off_l1,
        upper: c.l2 * on_l1 - pe_s,
    };
    Ok(A3Check {
        subadditive: slacks.subadditive >= -tolerance(pe_first + pe_second),
        lower: slacks.lower >= -tolerance(pe),
        upper: slacks.upper >= -tolerance(pe_s),
        slacks,
    })
}
