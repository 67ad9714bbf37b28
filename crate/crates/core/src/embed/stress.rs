//! Stress objectives over the upper triangle `i < j`, with residual
//! `e_ij = d_ij - ‖x_i - x_j‖`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{HuberDelta, StressConfig, StressKind, Weights};
use crate::metrics::DistanceMatrix;
use crate::{Error, Result};

/// Normalised root-mean-square mismatch between embedded distances and `D`.
pub fn kruskal_stress(coords: &DMatrix<f64>, distances: &DistanceMatrix) -> Result<f64> {
    check_shapes(coords, distances)?;
    let layout = Layout::new(coords);
    let (num, den) = kruskal_sums(&layout, distances);
    if den == 0.0 {
        return Err(Error::Degenerate("all target distances are zero".into()));
    }
    Ok((num / den).sqrt())
}

/// Value of the chosen objective. With [`HuberDelta::Auto`] the middle grid
/// value, `median(d_ij)`, is used.
pub fn stress_loss(
    kind: StressKind,
    coords: &DMatrix<f64>,
    distances: &DistanceMatrix,
    config: &StressConfig,
) -> Result<f64> {
    check_shapes(coords, distances)?;
    let objective = Objective::new(kind, distances, config, None)?;
    Ok(objective.value(&Layout::new(coords)))
}

/// Analytic gradient of the chosen objective with respect to `coords`.
/// Pairs of coincident embedded points contribute a zero subgradient.
pub fn stress_gradient(
    kind: StressKind,
    coords: &DMatrix<f64>,
    distances: &DistanceMatrix,
    config: &StressConfig,
) -> Result<DMatrix<f64>> {
    check_shapes(coords, distances)?;
    let objective = Objective::new(kind, distances, config, None)?;
    let (_, grad) = objective.value_and_gradient(&Layout::new(coords));
    Ok(DMatrix::from_row_slice(coords.nrows(), coords.ncols(), &grad))
}

pub(crate) fn check_shapes(coords: &DMatrix<f64>, distances: &DistanceMatrix) -> Result<()> {
    if coords.nrows() != distances.len() {
        return Err(Error::InvalidInput(format!(
            "{} embedded points for a {}-point distance matrix",
            coords.nrows(),
            distances.len()
        )));
    }
    crate::check_finite(coords, "coordinates")
}

pub(crate) fn median_distance(distances: &DistanceMatrix) -> f64 {
    let mut upper = distances.condensed();
    upper.sort_by(f64::total_cmp);
    let m = upper.len();
    if m == 0 {
        0.0
    } else if m % 2 == 1 {
        upper[m / 2]
    } else {
        0.5 * (upper[m / 2 - 1] + upper[m / 2])
    }
}

/// Row-major copy of a coordinate matrix.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub n: usize,
    pub p: usize,
    pub data: Vec<f64>,
}

impl Layout {
    pub fn new(coords: &DMatrix<f64>) -> Self {
        let (n, p) = coords.shape();
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            data.extend(coords.row(i).iter());
        }
        Self { n, p, data }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.p, &self.data)
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        crate::metrics::euclidean(self.point(i), self.point(j))
    }
}

fn kruskal_sums(layout: &Layout, distances: &DistanceMatrix) -> (f64, f64) {
    let n = layout.n;
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in (i + 1)..n {
                let d = distances.get(i, j);
                let r = layout.dist(i, j) - d;
                num += r * r;
                den += d * d;
            }
            (num, den)
        })
        .collect();
    rows.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y))
}

/// A stress objective bound to its target distances.
pub(crate) struct Objective<'a> {
    pub kind: StressKind,
    pub distances: &'a DistanceMatrix,
    pub delta: f64,
    pub weights: Option<&'a [f64]>,
    // Σ_{i<j} d_ij for Sammon, Σ d_ij² for Kruskal
    normalizer: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        kind: StressKind,
        distances: &'a DistanceMatrix,
        config: &'a StressConfig,
        delta_override: Option<f64>,
    ) -> Result<Self> {
        let n = distances.len();
        let upper = distances.condensed();
        let normalizer = match kind {
            StressKind::Kruskal => {
                let s: f64 = upper.iter().map(|d| d * d).sum();
                if s == 0.0 {
                    return Err(Error::Degenerate("all target distances are zero".into()));
                }
                s
            }
            StressKind::Sammon => {
                if let Some(k) = upper.iter().position(|&d| d == 0.0) {
                    let (i, j) = condensed_pair(n, k);
                    return Err(Error::Degenerate(format!(
                        "Sammon stress needs positive distances; points {i} and {j} coincide"
                    )));
                }
                upper.iter().sum()
            }
            StressKind::Huber | StressKind::Smacof => 1.0,
        };
        let delta = match (kind, delta_override, config.huber_delta) {
            (StressKind::Huber, Some(d), _) => d,
            (StressKind::Huber, None, HuberDelta::Fixed(d)) => d,
            (StressKind::Huber, None, HuberDelta::Auto) => median_distance(distances),
            _ => f64::INFINITY,
        };
        if kind == StressKind::Huber && (delta.is_nan() || delta <= 0.0) {
            return Err(Error::InvalidConfig(format!("Huber delta must be > 0, got {delta}")));
        }
        let weights = match (&config.weights, kind) {
            (Weights::Matrix(w), StressKind::Smacof) => {
                if w.len() != n * n {
                    return Err(Error::InvalidConfig(format!(
                        "weight matrix has {} entries, expected {}",
                        w.len(),
                        n * n
                    )));
                }
                Some(w.as_slice())
            }
            _ => None,
        };
        Ok(Self {
            kind,
            distances,
            delta,
            weights,
            normalizer,
        })
    }

    #[inline]
    fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i * self.distances.len() + j])
    }

    /// Per-pair contribution before normalisation.
    #[inline]
    fn term(&self, i: usize, j: usize, embedded: f64) -> f64 {
        let d = self.distances.get(i, j);
        let e = d - embedded;
        match self.kind {
            StressKind::Kruskal => e * e,
            StressKind::Huber => huber(e, self.delta),
            StressKind::Sammon => e * e / d,
            StressKind::Smacof => self.weight(i, j) * e * e,
        }
    }

    /// Derivative of the per-pair term with respect to the embedded distance.
    #[inline]
    fn term_slope(&self, i: usize, j: usize, embedded: f64) -> f64 {
        let d = self.distances.get(i, j);
        let e = d - embedded;
        match self.kind {
            StressKind::Kruskal => -2.0 * e,
            StressKind::Huber => -huber_slope(e, self.delta),
            StressKind::Sammon => -2.0 * e / d,
            StressKind::Smacof => -2.0 * self.weight(i, j) * e,
        }
    }

    fn raw_sum(&self, layout: &Layout) -> f64 {
        let n = layout.n;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| self.term(i, j, layout.dist(i, j))).sum())
            .collect();
        rows.iter().sum()
    }

    fn finish(&self, raw: f64) -> f64 {
        match self.kind {
            StressKind::Kruskal => (raw / self.normalizer).sqrt(),
            StressKind::Sammon => raw / self.normalizer,
            StressKind::Huber | StressKind::Smacof => raw,
        }
    }

    pub fn value(&self, layout: &Layout) -> f64 {
        self.finish(self.raw_sum(layout))
    }

    /// Objective value and its gradient with respect to the row-major
    /// coordinates. Coincident points contribute a zero subgradient.
    pub fn value_and_gradient(&self, layout: &Layout) -> (f64, Vec<f64>) {
        let (n, p) = (layout.n, layout.p);
        let per_row: Vec<(f64, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = layout.point(i);
                let mut g = vec![0.0; p];
                let mut upper = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    let dist = layout.dist(i, j);
                    if j > i {
                        upper += self.term(a, b, dist);
                    }
                    if dist == 0.0 {
                        continue;
                    }
                    let s = self.term_slope(a, b, dist) / dist;
                    let xj = layout.point(j);
                    for c in 0..p {
                        g[c] += s * (xi[c] - xj[c]);
                    }
                }
                (upper, g)
            })
            .collect();
        let raw: f64 = per_row.iter().map(|(u, _)| u).sum();
        let mut grad: Vec<f64> = per_row.into_iter().flat_map(|(_, g)| g).collect();
        let value = self.finish(raw);
        let factor = match self.kind {
            StressKind::Kruskal => {
                if value == 0.0 {
                    0.0
                } else {
                    1.0 / (2.0 * value * self.normalizer)
                }
            }
            StressKind::Sammon => 1.0 / self.normalizer,
            StressKind::Huber | StressKind::Smacof => 1.0,
        };
        grad.iter_mut().for_each(|v| *v *= factor);
        (value, grad)
    }
}

#[inline]
fn huber(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

/// At `|e| = δ` the quadratic branch supplies the subgradient.
#[inline]
fn huber_slope(e: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e
    } else {
        delta * e.signum()
    }
}

fn condensed_pair(n: usize, mut k: usize) -> (usize, usize) {
    for i in 0..n {
        let len = n - i - 1;
        if k < len {
            return (i, i + 1 + k);
        }
        k -= len;
    }
    unreachable!("condensed index out of range")
}
