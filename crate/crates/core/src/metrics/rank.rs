use crate::{Error, Result};

/// Tie-adjusted ranks of a vector.
///
/// Every member of a tie group receives the average of the 1-based positions
/// the group occupies in sorted order, so the ranks always sum to
/// `d(d+1)/2` and lie in `[1, d]`. Midranks are half-integers and therefore
/// exact in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector(Vec<f64>);

impl RankVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for RankVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Midranks of `v`.
pub fn midrank(v: &[f64]) -> Result<RankVector> {
    if v.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty vector".into()));
    }
    if let Some(j) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value {} at position {j}",
            v[j]
        )));
    }
    let mut ranks = vec![0.0; v.len()];
    let mut order = Vec::with_capacity(v.len());
    midrank_into(v, &mut order, &mut ranks);
    Ok(RankVector(ranks))
}

/// Writes midranks of finite `v` into `out`, reusing `order` as scratch.
pub(crate) fn midrank_into(v: &[f64], order: &mut Vec<usize>, out: &mut [f64]) {
    debug_assert_eq!(v.len(), out.len());
    order.clear();
    order.extend(0..v.len());
    order.sort_unstable_by(|&a, &b| v[a].total_cmp(&v[b]));

    let mut start = 0;
    while start < order.len() {
        let value = v[order[start]];
        let mut end = start + 1;
        // -0.0 and 0.0 compare equal here but not under total_cmp ordering;
        // they are adjacent after sorting so the group still forms correctly.
        while end < order.len() && v[order[end]] == value {
            end += 1;
        }
        // positions start+1 ..= end (1-based)
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            out[idx] = rank;
        }
        start = end;
    }
}
