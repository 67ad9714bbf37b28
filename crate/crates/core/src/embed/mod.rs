//! Classical MDS and stress-minimizing embeddings.

mod classical;
mod optimize;
mod stress;

use nalgebra::DMatrix;
use serde::Serialize;

pub use classical::{classical_mds, double_center};
pub use optimize::minimize_stress;
pub use stress::{kruskal_stress, stress_gradient, stress_loss};

pub(crate) use stress::{Layout, Objective};

use crate::metrics::DistanceMatrix;
use crate::Result;

/// How an [`Embedding`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Kruskal,
    Huber,
    Sammon,
    Smacof,
}

/// Objective minimized by [`minimize_stress`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StressKind {
    Kruskal,
    Huber,
    Sammon,
    Smacof,
}

impl From<StressKind> for Method {
    fn from(kind: StressKind) -> Self {
        match kind {
            StressKind::Kruskal => Method::Kruskal,
            StressKind::Huber => Method::Huber,
            StressKind::Sammon => Method::Sammon,
            StressKind::Smacof => Method::Smacof,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HuberDelta {
    /// Try `{0.5, 1, 2} × median(d_ij)` and keep the lowest Kruskal stress.
    Auto,
    Fixed(f64),
}

/// SMACOF pair weights. Other objectives ignore them.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    Uniform,
    /// Row-major n×n, symmetric and nonnegative.
    Matrix(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressConfig {
    pub loss: StressKind,
    pub huber_delta: HuberDelta,
    pub weights: Weights,
    pub max_iters: usize,
    /// Stop once the relative decrease of the objective falls below this.
    pub rel_tol: f64,
    /// Seeds the jitter that separates points the initialization collapses
    /// onto each other.
    pub seed: u64,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            loss: StressKind::Smacof,
            huber_delta: HuberDelta::Auto,
            weights: Weights::Uniform,
            max_iters: 300,
            rel_tol: 1e-6,
            seed: 0,
        }
    }
}

impl StressConfig {
    pub fn new(loss: StressKind) -> Self {
        Self {
            loss,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::Error;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if let HuberDelta::Fixed(d) = self.huber_delta {
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::InvalidConfig(format!("Huber delta must be > 0, got {d}")));
            }
        }
        if let Weights::Matrix(w) = &self.weights {
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Low-dimensional coordinates plus fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// n×p coordinates, one row per point.
    pub coords: DMatrix<f64>,
    pub method: Method,
    /// Achieved objective: Kruskal stress for classical MDS, otherwise the
    /// minimized loss.
    pub stress: f64,
    /// Retained eigenvalues before clamping, descending (classical only).
    pub eigenvalues: Vec<f64>,
    /// Number of retained eigenvalues that were negative and clamped to 0.
    pub clamped: usize,
    /// Share of the absolute eigenvalue mass that is negative.
    pub negative_mass: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit first.
    pub converged: bool,
    /// Objective value at the initialization and after every iteration.
    pub trace: Vec<f64>,
    pub huber_delta: Option<f64>,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }
}

/// Embedding procedure: eigendecomposition alone, or stress minimization
/// started from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Classical,
    Stress(StressConfig),
}

impl EmbedMethod {
    pub fn stress(kind: StressKind) -> Self {
        EmbedMethod::Stress(StressConfig::new(kind))
    }

    pub fn name(&self) -> Method {
        match self {
            EmbedMethod::Classical => Method::Classical,
            EmbedMethod::Stress(c) => c.loss.into(),
        }
    }
}

pub fn embed(distances: &DistanceMatrix, p: usize, method: &EmbedMethod) -> Result<Embedding> {
    match method {
        EmbedMethod::Classical => classical_mds(distances, p),
        EmbedMethod::Stress(config) => minimize_stress(distances, p, config),
    }
}
