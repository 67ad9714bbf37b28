//! Embedding quality metrics.
//!
//! Neighbour orders use Euclidean distance with ties broken by ascending
//! point index; a point is never its own neighbour.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::midrank;
use crate::{rows_of, Error, Result};

pub const DEFAULT_K_TRUST: usize = 5;
pub const DEFAULT_K_NN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub trustworthiness: f64,
    /// `None` when no labels are available.
    pub nn_agreement: Option<f64>,
    pub silhouette: Option<f64>,
    pub pearson: f64,
    pub spearman: f64,
    pub k_trust: usize,
    pub k_nn: usize,
}

/// Computes every metric; label-based ones only when `labels` is given.
pub fn evaluate(
    x: &DMatrix<f64>,
    coords: &DMatrix<f64>,
    labels: Option<&[usize]>,
    k_trust: usize,
    k_nn: usize,
) -> Result<EvalReport> {
    let trustworthiness = trustworthiness(x, coords, k_trust)?;
    let (pearson, spearman) = distance_correlations(x, coords)?;
    let (nn_agreement, silhouette) = match labels {
        Some(y) => (Some(nn_label_agreement(coords, y, k_nn)?), Some(silhouette(coords, y)?)),
        None => (None, None),
    };
    Ok(EvalReport {
        trustworthiness,
        nn_agreement,
        silhouette,
        pearson,
        spearman,
        k_trust,
        k_nn,
    })
}

/// Indices of all other points sorted by (distance, index).
fn neighbour_order(points: &[Vec<f64>], i: usize) -> Vec<usize> {
    let dist: Vec<f64> = points
        .iter()
        .map(|q| crate::metrics::euclidean(&points[i], q))
        .collect();
    let mut order: Vec<usize> = (0..points.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    order
}

fn check_rows(x: &DMatrix<f64>, coords: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != coords.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} original rows but {} embedded rows",
            x.nrows(),
            coords.nrows()
        )));
    }
    crate::check_finite(x, "data matrix")?;
    crate::check_finite(coords, "coordinates")
}

/// Trustworthiness `T(k)`: embedded-space neighbours that are not
/// original-space neighbours are penalised by `rank_X(i, j) - k`.
pub fn trustworthiness(x: &DMatrix<f64>, coords: &DMatrix<f64>, k: usize) -> Result<f64> {
    check_rows(x, coords)?;
    let n = x.nrows();
    if k == 0 || 2 * k >= n {
        return Err(Error::InvalidConfig(format!(
            "trustworthiness needs 1 <= k < n/2, got k = {k}, n = {n}"
        )));
    }
    let original = rows_of(x);
    let embedded = rows_of(coords);
    let penalties: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let orig_order = neighbour_order(&original, i);
            let mut rank = vec![0usize; n];
            for (r, &j) in orig_order.iter().enumerate() {
                rank[j] = r + 1;
            }
            neighbour_order(&embedded, i)
                .iter()
                .take(k)
                .filter(|&&j| rank[j] > k)
                .map(|&j| (rank[j] - k) as u64)
                .sum()
        })
        .collect();
    let total: u64 = penalties.iter().sum();
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total as f64)
}

/// Share of embedded-space k nearest neighbours carrying the point's label.
pub fn nn_label_agreement(coords: &DMatrix<f64>, labels: &[usize], k: usize) -> Result<f64> {
    let n = coords.nrows();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} points", labels.len())));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!(
            "neighbour agreement needs 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    crate::check_finite(coords, "coordinates")?;
    let points = rows_of(coords);
    let hits: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            neighbour_order(&points, i)
                .iter()
                .take(k)
                .filter(|&&j| labels[j] == labels[i])
                .count()
        })
        .collect();
    Ok(hits.iter().sum::<usize>() as f64 / (n * k) as f64)
}

/// Mean silhouette width. Members of singleton classes score 0.
pub fn silhouette(coords: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let n = coords.nrows();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} points", labels.len())));
    }
    crate::check_finite(coords, "coordinates")?;
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; classes];
    for &y in labels {
        sizes[y] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidConfig("silhouette needs at least two classes".into()));
    }
    let points = rows_of(coords);
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; classes];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += crate::metrics::euclidean(&points[i], &points[j]);
                }
            }
            let within = sums[own] / (sizes[own] - 1) as f64;
            let nearest = (0..classes)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = within.max(nearest);
            if denom == 0.0 {
                0.0
            } else {
                (nearest - within) / denom
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

pub(crate) fn pairwise_upper(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(crate::metrics::euclidean(&points[i], &points[j]));
        }
    }
    out
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput("correlation needs two samples of equal length >= 2".into()));
    }
    let m = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / m;
    let mean_b = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero-variance sample in correlation".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson on midranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    let ra = midrank(a)?;
    let rb = midrank(b)?;
    pearson(ra.as_slice(), rb.as_slice())
}

/// Pearson and Spearman correlations between original-space and
/// embedded-space Euclidean distances over all `n(n-1)/2` pairs.
pub fn distance_correlations(x: &DMatrix<f64>, coords: &DMatrix<f64>) -> Result<(f64, f64)> {
    check_rows(x, coords)?;
    if x.nrows() < 3 {
        return Err(Error::InvalidInput("distance correlations need at least 3 points".into()));
    }
    let original = pairwise_upper(&rows_of(x));
    let embedded = pairwise_upper(&rows_of(coords));
    Ok((pearson(&original, &embedded)?, spearman(&original, &embedded)?))
}
