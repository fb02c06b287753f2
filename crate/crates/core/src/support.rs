//! Support sets over main effects and pairs, and the strong-hierarchy check.

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::design::{Column, InteractionIndex};
use crate::error::{Error, Result};

/// Nonzero pattern split into main effects and pairs (0-based). Serialized
/// with 1-based labels: `{"main": [1, 2], "pairs": [[1, 2]]}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SupportSet {
    main: BTreeSet<usize>,
    pairs: BTreeSet<(usize, usize)>,
}

impl SupportSet {
    pub fn new(main: impl IntoIterator<Item = usize>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        if let Some(&(j, k)) = pairs.iter().find(|(j, k)| j >= k) {
            return Err(Error::domain(format!("pair ({j}, {k}) must satisfy j < k")));
        }
        Ok(Self { main: main.into_iter().collect(), pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn main(&self) -> &BTreeSet<usize> {
        &self.main
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    /// `s = |S(1)| + |S(2)|`.
    pub fn len(&self) -> usize {
        self.main.len() + self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every pair has both of its main effects in the support.
    pub fn is_hierarchical(&self) -> bool {
        self.pairs.iter().all(|(j, k)| self.main.contains(j) && self.main.contains(k))
    }

    /// Smallest hierarchical superset.
    pub fn closure(&self) -> Self {
        let mut main = self.main.clone();
        for &(j, k) in &self.pairs {
            main.insert(j);
            main.insert(k);
        }
        Self { main, pairs: self.pairs.clone() }
    }

    pub fn fits(&self, idx: InteractionIndex) -> bool {
        let p = idx.p();
        self.main.iter().all(|&j| j < p) && self.pairs.iter().all(|&(_, k)| k < p)
    }

    /// Flat column indices of the support, ascending.
    pub fn columns(&self, idx: InteractionIndex) -> Result<Vec<usize>> {
        if !self.fits(idx) {
            return Err(Error::domain(format!("support does not fit p = {}", idx.p())));
        }
        let mut cols: Vec<usize> = self.main.iter().copied().collect();
        cols.extend(self.pairs.iter().map(|&(j, k)| idx.pair_column_unchecked(j, k)));
        cols.sort_unstable();
        Ok(cols)
    }

    pub fn mask(&self, idx: InteractionIndex) -> Result<Vec<bool>> {
        let mut mask = vec![false; idx.p1()];
        for c in self.columns(idx)? {
            mask[c] = true;
        }
        Ok(mask)
    }

    pub fn from_columns(idx: InteractionIndex, cols: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty();
        for c in cols {
            match idx.column_to_pair(c)? {
                Column::Main(j) => {
                    s.main.insert(j);
                }
                Column::Pair(j, k) => {
                    s.pairs.insert((j, k));
                }
            }
        }
        Ok(s)
    }
}

/// Free-function form of [`SupportSet::is_hierarchical`].
pub fn hierarchy_check(s: &SupportSet) -> bool {
    s.is_hierarchical()
}

/// Free-function form of [`SupportSet::closure`].
pub fn hierarchy_closure(s: &SupportSet) -> SupportSet {
    s.closure()
}

#[derive(Serialize, Deserialize)]
struct SupportRepr {
    main: Vec<usize>,
    pairs: Vec<[usize; 2]>,
}

impl Serialize for SupportSet {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SupportRepr {
            main: self.main.iter().map(|j| j + 1).collect(),
            pairs: self.pairs.iter().map(|&(j, k)| [j + 1, k + 1]).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SupportSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SupportRepr::deserialize(de)?;
        if repr.main.contains(&0) || repr.pairs.iter().any(|p| p.contains(&0)) {
            return Err(D::Error::custom("support labels are 1-based"));
        }
        SupportSet::new(repr.main.into_iter().map(|j| j - 1), repr.pairs.into_iter().map(|[j, k]| (j - 1, k - 1)))
            .map_err(D::Error::custom)
    }
}
