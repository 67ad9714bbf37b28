use super::rank::{midrank, midrank_into};
use crate::{Error, Result};

/// Hyperparameter of the generalized Gini distance. Always strictly above 1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GiniParams {
    nu: f64,
}

impl GiniParams {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 1.0 {
            return Err(Error::InvalidParameter(format!("nu must be > 1, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Exponent applied to the survival function, `nu - 1`.
    pub(crate) fn exponent(&self) -> f64 {
        self.nu - 1.0
    }
}

/// Empirical survival function evaluated at each entry of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalVector {
    pub values: Vec<f64>,
    /// Survival value assigned to zero; a survival function symmetric about
    /// the origin takes the value 1/2 there.
    pub at_zero: f64,
}

/// Hazen plotting position `1 - (R - 1/2) / d`, strictly inside (0, 1).
#[inline]
fn hazen(rank: f64, d: f64) -> f64 {
    1.0 - (rank - 0.5) / d
}

pub fn empirical_survival(z: &[f64]) -> Result<SurvivalVector> {
    let ranks = midrank(z)?;
    let d = z.len() as f64;
    Ok(SurvivalVector {
        values: ranks.as_slice().iter().map(|&r| hazen(r, d)).collect(),
        at_zero: 0.5,
    })
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("empty vectors".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    Ok(())
}

/// Gini seminorm `Σ x_j (R(x_j) - (d+1)/2)`.
pub fn gini_norm(x: &[f64]) -> Result<f64> {
    let ranks = midrank(x)?;
    Ok(norm_from_ranks(x, ranks.as_slice()))
}

pub(crate) fn norm_from_ranks(x: &[f64], ranks: &[f64]) -> f64 {
    let center = (x.len() as f64 + 1.0) / 2.0;
    x.iter().zip(ranks).map(|(&v, &r)| v * (r - center)).sum()
}

/// Base Gini pseudo-distance: the seminorm of `x - y`.
pub fn gini_pseudo_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    gini_norm(&z)
}

/// Directed generalized distance `-d Σ z_j (F̄^{ν-1}(z_j) - F̄^{ν-1}(0))` with
/// `z = x - y`. Not symmetric, and negative for some skewed differences.
pub fn gen_gini_directed(x: &[f64], y: &[f64], params: GiniParams) -> Result<f64> {
    check_pair(x, y)?;
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let ranks = midrank(&z)?;
    Ok(directed_kernel(&z, ranks.as_slice(), &SurvivalPowers::direct(params, z.len())))
}

/// Symmetrized generalized Gini pseudo-distance
/// `½ D_ν(x, y) + ½ D_ν(y, x)`.
///
/// On difference vectors with ties the midrank-based survival weights no
/// longer sum to zero for ν ∉ {2, 3}, and the raw value can dip below zero;
/// such values are clamped at 0.
pub fn gen_gini_distance(x: &[f64], y: &[f64], params: GiniParams) -> Result<f64> {
    check_pair(x, y)?;
    let mut z = Vec::with_capacity(x.len());
    let mut ranks = vec![0.0; x.len()];
    let mut order = Vec::with_capacity(x.len());
    Ok(symmetric_distance(
        x,
        y,
        &SurvivalPowers::direct(params, x.len()),
        &mut z,
        &mut order,
        &mut ranks,
    ))
}

/// Source of `F̄(R)^{ν-1}` values for a fixed dimension `d` and ν.
///
/// Midranks are half-integers in `[1, d]`, so every survival power that can
/// occur is cached by index `2R`. Both variants call `powf` on the same
/// argument and therefore agree bit-for-bit.
pub(crate) enum SurvivalPowers {
    Direct { exponent: f64, d: f64 },
    Table { table: Vec<f64>, at_zero: f64, d: f64 },
}

impl SurvivalPowers {
    pub(crate) fn direct(params: GiniParams, d: usize) -> Self {
        SurvivalPowers::Direct {
            exponent: params.exponent(),
            d: d as f64,
        }
    }

    pub(crate) fn table(params: GiniParams, d: usize) -> Self {
        let df = d as f64;
        let exponent = params.exponent();
        let table = (0..=2 * d)
            .map(|k| hazen(k as f64 / 2.0, df).powf(exponent))
            .collect();
        SurvivalPowers::Table {
            table,
            at_zero: 0.5f64.powf(exponent),
            d: df,
        }
    }

    #[inline]
    fn d(&self) -> f64 {
        match self {
            SurvivalPowers::Direct { d, .. } | SurvivalPowers::Table { d, .. } => *d,
        }
    }

    #[inline]
    fn at_zero(&self) -> f64 {
        match self {
            SurvivalPowers::Direct { exponent, .. } => 0.5f64.powf(*exponent),
            SurvivalPowers::Table { at_zero, .. } => *at_zero,
        }
    }

    #[inline]
    fn at_rank(&self, rank: f64) -> f64 {
        match self {
            SurvivalPowers::Direct { exponent, d } => hazen(rank, *d).powf(*exponent),
            SurvivalPowers::Table { table, .. } => table[(2.0 * rank) as usize],
        }
    }
}

pub(crate) fn directed_kernel(z: &[f64], ranks: &[f64], powers: &SurvivalPowers) -> f64 {
    let zero = powers.at_zero();
    let sum: f64 = z
        .iter()
        .zip(ranks)
        .map(|(&zj, &r)| zj * (powers.at_rank(r) - zero))
        .sum();
    -powers.d() * sum
}

/// Symmetrized kernel on precomputed `z = x - y` and its midranks. The
/// reverse direction uses `-z` with ranks `d + 1 - R`, which is exactly what
/// ranking `y - x` produces.
pub(crate) fn symmetric_kernel(z: &[f64], ranks: &[f64], powers: &SurvivalPowers) -> f64 {
    let d = z.len() as f64;
    let zero = powers.at_zero();
    let mut forward = 0.0;
    let mut backward = 0.0;
    for (&zj, &r) in z.iter().zip(ranks) {
        forward += zj * (powers.at_rank(r) - zero);
        backward += -zj * (powers.at_rank(d + 1.0 - r) - zero);
    }
    let value = 0.5 * (-powers.d() * forward) + 0.5 * (-powers.d() * backward);
    value.max(0.0)
}

pub(crate) fn symmetric_distance(
    x: &[f64],
    y: &[f64],
    powers: &SurvivalPowers,
    z: &mut Vec<f64>,
    order: &mut Vec<usize>,
    ranks: &mut [f64],
) -> f64 {
    z.clear();
    z.extend(x.iter().zip(y).map(|(a, b)| a - b));
    midrank_into(z, order, ranks);
    symmetric_kernel(z, ranks, powers)
}
