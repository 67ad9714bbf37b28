//! Selection of the Gini hyperparameter ν.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::embed::{embed, kruskal_stress, EmbedMethod, Embedding, StressConfig, StressKind};
use crate::metrics::{DistanceMatrix, GiniPairCache, GiniParams};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Strictly increasing list of candidate ν values, each above 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuGrid(Vec<f64>);

impl NuGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("ν grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 1.0)) {
            return Err(Error::InvalidConfig(format!("ν grid value {v} is not > 1")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("ν grid must be strictly increasing".into()));
        }
        Ok(Self(values))
    }

    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidConfig("ν grid needs at least one value".into())),
            1 if lo == hi => Self::new(vec![lo]),
            1 => Err(Error::InvalidConfig(format!("a one-value grid needs lo == hi, got {lo}:{hi}"))),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                let mut values: Vec<f64> = (0..count).map(|k| lo + step * k as f64).collect();
                values[count - 1] = hi;
                Self::new(values)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for NuGrid {
    /// 30 values over `[1.1, 5.0]`.
    fn default() -> Self {
        Self::linspace(1.1, 5.0, 30).expect("valid default grid")
    }
}

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuScore {
    pub nu: f64,
    pub mean_stress: f64,
    pub fold_stress: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    /// One entry per grid value, in grid order.
    pub per_nu: Vec<NuScore>,
    pub nu_star: f64,
    /// Embedding of all rows at `nu_star`.
    pub best_embedding: Embedding,
    pub folds: usize,
    pub seed: u64,
}

/// Seeded shuffle split into `k` contiguous blocks; each block is returned
/// in ascending row order. `k = 1` keeps every row in its original order.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= folds <= n, got {k} folds for {n} rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if k > 1 {
        order.shuffle(&mut rng::stream(seed, Stream::Folds, 0, 0));
    }
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

fn rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

/// Kruskal stress of an embedding of `distances`; an all-zero target is
/// reproduced exactly by any embedding method and scores 0.
fn fit_stress(distances: &DistanceMatrix, p: usize, method: &EmbedMethod) -> Result<f64> {
    if distances.max() == 0.0 {
        return Ok(0.0);
    }
    let emb = embed(distances, p, method)?;
    kruskal_stress(&emb.coords, distances)
}

/// Index of the smallest score; ties go to the earliest (smallest ν).
fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = k;
        }
    }
    best
}

/// Chooses ν by the mean over folds of the Kruskal stress between each
/// fold's Gini distances and its `p`-dimensional embedding, then embeds all
/// rows at the winning ν.
pub fn tune_nu(
    x: &DMatrix<f64>,
    p: usize,
    grid: &NuGrid,
    k_folds: usize,
    method: &EmbedMethod,
    seed: u64,
) -> Result<TuneReport> {
    if p == 0 {
        return Err(Error::InvalidConfig("target dimension must be >= 1".into()));
    }
    let folds = fold_indices(x.nrows(), k_folds, seed)?;
    if let Some(small) = folds.iter().find(|f| f.len() < p + 1 || f.len() < 2) {
        return Err(Error::InvalidConfig(format!(
            "a fold of {} rows cannot be embedded in {p} dimensions",
            small.len()
        )));
    }
    let caches = folds
        .iter()
        .map(|f| GiniPairCache::new(&rows(x, f)))
        .collect::<Result<Vec<_>>>()?;
    let params = grid
        .values()
        .iter()
        .map(|&nu| GiniParams::new(nu))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..params.len())
        .flat_map(|a| (0..caches.len()).map(move |b| (a, b)))
        .collect();
    let stress: Vec<f64> = cells
        .par_iter()
        .map(|&(a, b)| fit_stress(&caches[b].matrix(params[a]), p, method))
        .collect::<Result<Vec<_>>>()?;

    let per_nu: Vec<NuScore> = params
        .iter()
        .enumerate()
        .map(|(a, prm)| {
            let fold_stress = stress[a * caches.len()..(a + 1) * caches.len()].to_vec();
            NuScore {
                nu: prm.nu(),
                mean_stress: fold_stress.iter().sum::<f64>() / fold_stress.len() as f64,
                fold_stress,
            }
        })
        .collect();
    let means: Vec<f64> = per_nu.iter().map(|s| s.mean_stress).collect();
    let best = argmin(&means);

    let full = if k_folds == 1 {
        caches.into_iter().next().expect("one fold")
    } else {
        GiniPairCache::new(x)?
    };
    let best_embedding = embed(&full.matrix(params[best]), p, method)?;
    Ok(TuneReport {
        nu_star: params[best].nu(),
        per_nu,
        best_embedding,
        folds: k_folds,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternatingStep {
    /// ν the Sammon embedding was fitted at.
    pub nu: f64,
    pub sammon_stress: f64,
    /// Grid value minimizing Kruskal stress against that embedding.
    pub nu_star: f64,
    pub kruskal_stress: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingResult {
    /// Sammon embedding from the last outer iteration.
    pub embedding: Embedding,
    /// ν the returned embedding was fitted at.
    pub embedding_nu: f64,
    /// ν after the final update.
    pub nu: f64,
    pub history: Vec<AlternatingStep>,
}

/// Alternates a Sammon embedding of the Gini distances at the current ν
/// with a grid update of ν by Kruskal stress against that embedding,
/// starting from ν = 2, for `iterations` rounds.
pub fn alternating_tune(
    x: &DMatrix<f64>,
    p: usize,
    iterations: usize,
    grid: &NuGrid,
    seed: u64,
) -> Result<AlternatingResult> {
    if iterations == 0 {
        return Err(Error::InvalidConfig("need at least one outer iteration".into()));
    }
    let cache = GiniPairCache::new(x)?;
    let params = grid
        .values()
        .iter()
        .map(|&nu| GiniParams::new(nu))
        .collect::<Result<Vec<_>>>()?;
    let config = StressConfig {
        seed,
        ..StressConfig::new(StressKind::Sammon)
    };

    let mut nu = GiniParams::new(2.0)?;
    let mut history = Vec::with_capacity(iterations);
    let mut last = None;
    for _ in 0..iterations {
        let distances = cache.matrix(nu);
        let emb = embed(&distances, p, &EmbedMethod::Stress(config.clone()))?;
        let scores = params
            .par_iter()
            .map(|&prm| kruskal_stress(&emb.coords, &cache.matrix(prm)))
            .collect::<Result<Vec<_>>>()?;
        let best = argmin(&scores);
        history.push(AlternatingStep {
            nu: nu.nu(),
            sammon_stress: emb.stress,
            nu_star: params[best].nu(),
            kruskal_stress: scores[best],
        });
        last = Some((emb, nu.nu()));
        nu = params[best];
    }
    let (embedding, embedding_nu) = last.expect("at least one iteration");
    Ok(AlternatingResult {
        embedding,
        embedding_nu,
        nu: nu.nu(),
        history,
    })
}
