//! Robust multidimensional scaling built on the Gini pseudo-distance family.
//!
//! The crate is organised around five modules:
//!
//! * [`metrics`]: midranks, the Gini seminorm, the base and generalized
//!   (ν-weighted, symmetrized) Gini pseudo-distances and pairwise matrices.
//! * [`embed`]: classical (Torgerson) MDS and stress minimization for the
//!   Kruskal, Huber, Sammon and SMACOF objectives.
//! * [`tune`]: ν selection by cross-validated Kruskal stress, and the
//!   alternating Sammon / ν loop used for the heavy-tailed simulations.
//! * [`eval`]: trustworthiness, neighbour label agreement, silhouette and
//!   distance correlations.
//! * [`data`]: CSV ingestion, standardization, contamination and the
//!   heavy-tailed generator.
//!
//! Matrices of observations and coordinates are `nalgebra::DMatrix<f64>`
//! with one row per point.

pub mod data;
pub mod embed;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod rng;
pub mod tune;

pub use error::{Error, ErrorClass, Result};

pub use nalgebra::DMatrix;

/// Copies the rows of a matrix into contiguous row-major vectors.
pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows())
        .map(|i| x.row(i).iter().copied().collect())
        .collect()
}

pub(crate) fn check_finite(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % x.nrows(), pos / x.nrows());
        return Err(Error::InvalidInput(format!(
            "{what} has a non-finite entry at row {r}, column {c}"
        )));
    }
    Ok(())
}
