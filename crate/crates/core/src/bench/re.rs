//! Restricted eigenvalue constant
//! `M(k0, s) = min ||Z a||_2 / (sqrt(n) ||a_J||_2)` over `|J| <= s` and the
//! cone `||a_{J^c}||_1 <= k0 ||a_J||_1`.
//!
//! The minimum is nonconvex; every reported value is the smallest ratio
//! found by projected descent and therefore an upper bound on `M`.
//!
//! For a fixed `J` the search uses `a_J = u` on the unit sphere and
//! `a_{J^c} = w` in the `l1` ball of radius `k0 ||u||_1`. Random quantities
//! attached to a column are keyed by the column's contents, which makes the
//! whole search equivariant under column permutations.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::prox::project_l1_ball;
use crate::rng::{derived_seed, from_seed, stream};

const MAX_STEPS: usize = 400;
const EXHAUSTIVE_MAX_P1: usize = 30;
const EXHAUSTIVE_MAX_S: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReMethod {
    /// Every `J` with `|J| <= s`; needs `p1 <= 30`, `s <= 2`.
    ExhaustiveSupports,
    /// `budget` supports sampled with `|J|` uniform on `1..=s`.
    RandomConeDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReEstimate {
    pub k0: f64,
    pub s: usize,
    /// Smallest ratio found; an upper bound on `M(k0, s)`.
    pub m_hat: f64,
    pub minimizer: Vec<f64>,
    /// Support `J` of the minimizer, 0-based columns.
    pub support: Vec<usize>,
    pub method: ReMethod,
    /// Descent runs performed.
    pub samples: usize,
}

impl ReEstimate {
    /// `||a_{J^c}||_1 <= k0 ||a_J||_1 + 1e-9`.
    pub fn in_cone(&self) -> bool {
        let (inside, outside) = split_l1(&self.minimizer, &self.support);
        outside <= self.k0 * inside + 1e-9
    }
}

fn split_l1(a: &[f64], j: &[usize]) -> (f64, f64) {
    let total: f64 = a.iter().map(|v| v.abs()).sum();
    let inside: f64 = j.iter().map(|&i| a[i].abs()).sum();
    (inside, total - inside)
}

/// `||Z a|| / (sqrt(n) ||a_J||)`.
pub fn re_ratio(z: &DMatrix<f64>, a: &[f64], j: &[usize]) -> f64 {
    let za = z * DVector::from_column_slice(a);
    let aj: f64 = j.iter().map(|&i| a[i] * a[i]).sum::<f64>().sqrt();
    za.norm() / ((z.nrows() as f64).sqrt() * aj)
}

pub fn re_constant(
    z: &DMatrix<f64>,
    s: usize,
    k0: f64,
    method: ReMethod,
    budget: usize,
    seed: u64,
) -> Result<ReEstimate> {
    let p1 = z.ncols();
    if budget == 0 {
        return Err(Error::domain("the search budget must be positive"));
    }
    if s == 0 || s > p1 {
        return Err(Error::domain(format!("sparsity s = {s} must lie in 1..={p1}")));
    }
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::domain("cone constant k0 must be positive"));
    }
    if z.nrows() == 0 || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("RE design must be nonempty and finite"));
    }
    let gram = z.tr_mul(z) / z.nrows() as f64;
    let keys: Vec<u64> = z.column_iter().map(|c| column_key(c.as_slice())).collect();
    let search = Search { gram: &gram, keys: &keys, k0, seed };

    let supports: Vec<Vec<usize>> = match method {
        ReMethod::ExhaustiveSupports => {
            if p1 > EXHAUSTIVE_MAX_P1 || s > EXHAUSTIVE_MAX_S {
                return Err(Error::domain(format!(
                    "exhaustive search needs p1 <= {EXHAUSTIVE_MAX_P1} and s <= {EXHAUSTIVE_MAX_S}"
                )));
            }
            let mut all: Vec<Vec<usize>> = (0..p1).map(|i| vec![i]).collect();
            if s == 2 {
                all.extend((0..p1).flat_map(|i| (i + 1..p1).map(move |k| vec![i, k])));
            }
            all
        }
        ReMethod::RandomConeDescent => (0..budget as u64).map(|t| search.random_support(s, t)).collect(),
    };
    let starts_per_support = match method {
        ReMethod::ExhaustiveSupports => budget,
        ReMethod::RandomConeDescent => 1,
    };

    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut samples = 0;
    for (t, j) in supports.iter().enumerate() {
        for start in 0..starts_per_support {
            let a = search.descend(j, (t * starts_per_support + start) as u64);
            samples += 1;
            let r = quad(&gram, &a).max(0.0).sqrt();
            if best.as_ref().is_none_or(|(b, _, _)| r < *b) {
                best = Some((r, a, j.clone()));
            }
        }
    }
    let (_, minimizer, support) = best.expect("budget is positive");
    Ok(ReEstimate { k0, s, m_hat: re_ratio(z, &minimizer, &support), minimizer, support, method, samples })
}

fn column_key(col: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in col {
        // +0 and -0 hash alike
        (v + 0.0).to_bits().hash(&mut h);
    }
    h.finish()
}

fn quad(g: &DMatrix<f64>, a: &[f64]) -> f64 {
    let v = DVector::from_column_slice(a);
    v.dot(&(g * &v))
}

struct Search<'a> {
    gram: &'a DMatrix<f64>,
    keys: &'a [u64],
    k0: f64,
    seed: u64,
}

impl Search<'_> {
    /// `J` of uniform size `1..=s`: the columns with the smallest keyed
    /// draws, so the choice follows the columns under permutation.
    fn random_support(&self, s: usize, t: u64) -> Vec<usize> {
        let size = stream(self.seed, u64::MAX, t).random_range(1..=s);
        let mut order: Vec<(u64, usize)> =
            self.keys.iter().enumerate().map(|(i, &k)| (derived_seed(self.seed ^ k, t, 1), i)).collect();
        order.sort_unstable();
        let mut j: Vec<usize> = order[..size].iter().map(|&(_, i)| i).collect();
        j.sort_unstable();
        j
    }

    /// Start 0 is `u` uniform on `J`, `w = 0`; later starts draw `u` and a
    /// feasible `w` from column-keyed streams.
    fn start(&self, j: &[usize], run: u64) -> (Vec<f64>, Vec<f64>) {
        let p1 = self.gram.nrows();
        let mut a = vec![0.0; p1];
        let in_j = |i: usize| j.contains(&i);
        let draw = |i: usize, salt: u64| -> f64 {
            let mut rng = from_seed(derived_seed(self.seed ^ self.keys[i], run, salt));
            2.0 * rng.random::<f64>() - 1.0
        };
        if run == 0 {
            j.iter().for_each(|&i| a[i] = 1.0);
        } else {
            j.iter().for_each(|&i| a[i] = draw(i, 2));
        }
        normalize_on(&mut a, j);
        let mut w: Vec<f64> = (0..p1).map(|i| if in_j(i) || run == 0 { 0.0 } else { draw(i, 3) }).collect();
        let radius = self.k0 * j.iter().map(|&i| a[i].abs()).sum::<f64>();
        project_l1_ball(&mut w, radius);
        (a, w)
    }

    fn descend(&self, j: &[usize], run: u64) -> Vec<f64> {
        let p1 = self.gram.nrows();
        let (mut a, w) = self.start(j, run);
        for i in 0..p1 {
            if !j.contains(&i) {
                a[i] = w[i];
            }
        }
        let mut f = quad(self.gram, &a);
        let mut step = 1.0;
        let mut trial = vec![0.0; p1];
        let mut outside = vec![0.0; p1];
        for _ in 0..MAX_STEPS {
            let grad = self.gram * DVector::from_column_slice(&a) * 2.0;
            let mut improved = false;
            while step > 1e-12 {
                for i in 0..p1 {
                    trial[i] = a[i] - step * grad[i];
                }
                normalize_on(&mut trial, j);
                let radius = self.k0 * j.iter().map(|&i| trial[i].abs()).sum::<f64>();
                for i in 0..p1 {
                    outside[i] = if j.contains(&i) { 0.0 } else { trial[i] };
                }
                project_l1_ball(&mut outside, radius);
                for i in 0..p1 {
                    if !j.contains(&i) {
                        trial[i] = outside[i];
                    }
                }
                let ft = quad(self.gram, &trial);
                if ft < f {
                    let gain = f - ft;
                    a.copy_from_slice(&trial);
                    f = ft;
                    step *= 2.0;
                    improved = gain > 1e-14 * f.max(1e-300);
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        a
    }
}

/// Scale so that `||a_J||_2 = 1`, leaving other entries untouched.
fn normalize_on(a: &mut [f64], j: &[usize]) {
    let norm = j.iter().map(|&i| a[i] * a[i]).sum::<f64>().sqrt();
    if norm > 0.0 {
        j.iter().for_each(|&i| a[i] /= norm);
    } else {
        a[j[0]] = 1.0;
    }
}
