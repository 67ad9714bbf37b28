use nalgebra::DMatrix;
use rayon::prelude::*;

use super::gini::{symmetric_distance, symmetric_kernel, GiniParams, SurvivalPowers};
use super::rank::midrank_into;
use crate::{rows_of, Error, Result};

/// Symmetric, zero-diagonal, nonnegative n×n dissimilarities (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates and wraps a row-major n×n buffer.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative value"
                    )));
                }
                if v != entries[j * n + i] {
                    return Err(Error::InvalidInput(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("distance matrix must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    /// Builds from a function evaluated on the upper triangle only.
    pub(crate) fn from_upper(n: usize, upper: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| upper(i, j)).collect())
            .collect();
        assemble(n, &rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Upper-triangle entries in row order (`(0,1), (0,2), …, (n-2,n-1)`).
    pub fn condensed(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.entries[i * n + i + 1..(i + 1) * n]);
        }
        out
    }

    /// Restriction to the given indices, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut entries = Vec::with_capacity(m * m);
        for &a in idx {
            for &b in idx {
                entries.push(self.get(a, b));
            }
        }
        Self { n: m, entries }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Dissimilarity used to build a [`DistanceMatrix`] from observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Euclidean,
    Gini(GiniParams),
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// All pairwise dissimilarities between the rows of `x`.
///
/// Entries are computed independently, so the result does not depend on the
/// size of the rayon pool.
pub fn pairwise_matrix(x: &DMatrix<f64>, metric: Metric) -> Result<DistanceMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {n}")));
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidInput("need at least one feature".into()));
    }
    crate::check_finite(x, "data matrix")?;
    let rows = rows_of(x);
    let out = match metric {
        Metric::Euclidean => DistanceMatrix::from_upper(n, |i, j| euclidean(&rows[i], &rows[j])),
        Metric::Gini(params) => {
            let d = x.ncols();
            let powers = SurvivalPowers::table(params, d);
            let rows_out: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut z = Vec::with_capacity(d);
                    let mut order = Vec::with_capacity(d);
                    let mut ranks = vec![0.0; d];
                    ((i + 1)..n)
                        .map(|j| {
                            symmetric_distance(
                                &rows[i], &rows[j], &powers, &mut z, &mut order, &mut ranks,
                            )
                        })
                        .collect()
                })
                .collect();
            assemble(n, &rows_out)
        }
    };
    if out.entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("pairwise distance overflowed f64".into()));
    }
    Ok(out)
}

fn assemble(n: usize, upper_rows: &[Vec<f64>]) -> DistanceMatrix {
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper_rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    DistanceMatrix { n, entries }
}

/// Row differences and their midranks for every pair of a point set.
///
/// Midranks of `x_i - x_j` do not depend on ν, so sweeping a ν grid only
/// re-evaluates the survival weights. Produces the same bits as
/// [`pairwise_matrix`].
#[derive(Debug, Clone)]
pub struct GiniPairCache {
    n: usize,
    d: usize,
    // upper-triangle pairs in row order, `d` values each
    diffs: Vec<f64>,
    ranks: Vec<f64>,
}

impl GiniPairCache {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        let d = x.ncols();
        if n < 2 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 rows and 1 feature, got {n}×{d}"
            )));
        }
        crate::check_finite(x, "data matrix")?;
        let rows = rows_of(x);
        let per_row: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let count = n - i - 1;
                let mut diffs = Vec::with_capacity(count * d);
                let mut ranks = vec![0.0; count * d];
                let mut order = Vec::with_capacity(d);
                for (k, j) in ((i + 1)..n).enumerate() {
                    let start = diffs.len();
                    diffs.extend(rows[i].iter().zip(&rows[j]).map(|(a, b)| a - b));
                    midrank_into(&diffs[start..], &mut order, &mut ranks[k * d..(k + 1) * d]);
                }
                (diffs, ranks)
            })
            .collect();
        let (diffs, ranks): (Vec<_>, Vec<_>) = per_row.into_iter().unzip();
        Ok(Self {
            n,
            d,
            diffs: diffs.concat(),
            ranks: ranks.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn matrix(&self, params: GiniParams) -> DistanceMatrix {
        let (n, d) = (self.n, self.d);
        let powers = SurvivalPowers::table(params, d);
        let row_start = |i: usize| i * (2 * n - i - 1) / 2;
        let rows_out: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let base = row_start(i);
                (0..(n - i - 1))
                    .map(|k| {
                        let s = (base + k) * d;
                        symmetric_kernel(&self.diffs[s..s + d], &self.ranks[s..s + d], &powers)
                    })
                    .collect()
            })
            .collect();
        assemble(n, &rows_out)
    }
}
