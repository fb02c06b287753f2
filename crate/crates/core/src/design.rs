//! Interaction design construction.
//!
//! Columns are ordered main effects first, then the pairs `(j, k)`, `j < k`,
//! in lexicographic order: `(0,1), (0,2), .., (0,p-1), (1,2), .., (p-2,p-1)`.
//! All indices in this module are 0-based; file formats convert to 1-based
//! labels at the boundary.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bijection between flat column indices and main effects / pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionIndex {
    p: usize,
    p1: usize,
}

/// What a column of the interaction design holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Column {
    Main(usize),
    Pair(usize, usize),
}

impl InteractionIndex {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("number of main effects must be positive"));
        }
        Ok(Self { p, p1: p * (p + 1) / 2 })
    }

    /// Index for the design with `p1` columns, if `p1` is triangular.
    pub fn from_columns(p1: usize) -> Result<Self> {
        let p = ((((8 * p1 + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
        if p == 0 || p * (p + 1) / 2 != p1 {
            return Err(Error::domain(format!("{p1} is not of the form p(p+1)/2")));
        }
        Self::new(p)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn p1(&self) -> usize {
        self.p1
    }

    pub fn n_pairs(&self) -> usize {
        self.p1 - self.p
    }

    pub fn pair_to_column(&self, j: usize, k: usize) -> Result<usize> {
        if j >= k || k >= self.p {
            return Err(Error::domain(format!("pair ({j}, {k}) invalid for p = {} (need j < k < p)", self.p)));
        }
        Ok(self.pair_column_unchecked(j, k))
    }

    #[inline]
    pub(crate) fn pair_column_unchecked(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k && k < self.p);
        // rows 0..j contribute (p-1) + (p-2) + .. + (p-j) = j(2p-j-1)/2 pairs
        self.p + j * (2 * self.p - j - 1) / 2 + (k - j - 1)
    }

    pub fn column_to_pair(&self, col: usize) -> Result<Column> {
        if col >= self.p1 {
            return Err(Error::domain(format!("column {col} out of range (p1 = {})", self.p1)));
        }
        if col < self.p {
            return Ok(Column::Main(col));
        }
        let mut offset = col - self.p;
        for j in 0..self.p - 1 {
            let row = self.p - 1 - j;
            if offset < row {
                return Ok(Column::Pair(j, j + 1 + offset));
            }
            offset -= row;
        }
        unreachable!("column index checked against p1")
    }

    /// Columns of all interactions involving main effect `j`, ordered by the
    /// partner index.
    pub fn interactions_of(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.p).filter(move |&m| m != j).map(move |m| self.pair_column_unchecked(j.min(m), j.max(m)))
    }

    pub fn interaction_columns(&self) -> std::ops::Range<usize> {
        self.p..self.p1
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.p).flat_map(move |j| (j + 1..self.p).map(move |k| (j, k)))
    }

    /// Human-readable label, 1-based: `x3` or `x1:x4`.
    pub fn label(&self, col: usize) -> Result<String> {
        Ok(match self.column_to_pair(col)? {
            Column::Main(j) => format!("x{}", j + 1),
            Column::Pair(j, k) => format!("x{}:x{}", j + 1, k + 1),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    /// Subtract empirical column means from every column.
    pub center: bool,
    /// Scale every column to unit empirical variance after centering.
    pub standardize: bool,
}

impl Expansion {
    pub fn raw() -> Self {
        Self::default()
    }

    pub fn centered() -> Self {
        Self { center: true, standardize: false }
    }
}

/// Column transforms applied after expansion, kept so new rows can be mapped
/// consistently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub means: Vec<f64>,
    pub scales: Option<Vec<f64>>,
}

/// The `n x p1` interaction design `Z = (X, X*)`.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    index: InteractionIndex,
    centering: Option<Centering>,
}

impl DesignMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn index(&self) -> InteractionIndex {
        self.index
    }

    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Wrap an already expanded matrix, e.g. a hand-built test design.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let index = InteractionIndex::from_columns(values.ncols())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("design contains non-finite entries"));
        }
        Ok(Self { values, index, centering: None })
    }

    /// Expand new main-effect rows with this design's column transforms.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.index.p() {
            return Err(Error::domain(format!("expected {} main-effect columns, got {}", self.index.p(), x.ncols())));
        }
        let mut z = raw_products(x, self.index)?;
        if let Some(c) = &self.centering {
            apply_centering(&mut z, c);
        }
        Ok(z)
    }
}

fn raw_products(x: &DMatrix<f64>, index: InteractionIndex) -> Result<DMatrix<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("main-effect matrix contains non-finite entries"));
    }
    let n = x.nrows();
    let p = index.p();
    let mut z = DMatrix::zeros(n, index.p1());
    z.columns_mut(0, p).copy_from(x);
    let mut col = p;
    for j in 0..p {
        for k in j + 1..p {
            let (xj, xk) = (x.column(j), x.column(k));
            z.column_mut(col).zip_zip_apply(&xj, &xk, |out, a, b| *out = a * b);
            col += 1;
        }
    }
    Ok(z)
}

fn apply_centering(z: &mut DMatrix<f64>, c: &Centering) {
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let m = c.means[j];
        let s = c.scales.as_ref().map_or(1.0, |s| s[j]);
        col.apply(|v| *v = (*v - m) / s);
    }
}

/// Build `Z = (X, X*)` from an `n x p` main-effects matrix.
pub fn expand_design(x: &DMatrix<f64>, opts: Expansion) -> Result<DesignMatrix> {
    if x.nrows() == 0 {
        return Err(Error::domain("design needs at least one row"));
    }
    if x.ncols() < 2 {
        return Err(Error::domain("interaction design needs p >= 2"));
    }
    let index = InteractionIndex::new(x.ncols())?;
    let mut values = raw_products(x, index)?;
    let n = values.nrows() as f64;
    let centering = if opts.center || opts.standardize {
        let means: Vec<f64> =
            if opts.center { values.column_iter().map(|c| c.sum() / n).collect() } else { vec![0.0; index.p1()] };
        let scales = opts.standardize.then(|| {
            values
                .column_iter()
                .zip(&means)
                .map(|(c, m)| {
                    let ss: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
                    let sd = (ss / n).sqrt();
                    if sd > 0.0 {
                        sd
                    } else {
                        1.0
                    }
                })
                .collect()
        });
        let c = Centering { means, scales };
        apply_centering(&mut values, &c);
        Some(c)
    } else {
        None
    };
    Ok(DesignMatrix { values, index, centering })
}
