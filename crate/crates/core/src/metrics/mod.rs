//! Rank statistics and the Gini distance family.

mod gini;
mod pairwise;
mod rank;

pub use gini::{
    empirical_survival, gen_gini_directed, gen_gini_distance, gini_norm, gini_pseudo_distance,
    GiniParams, SurvivalVector,
};
pub use pairwise::{euclidean, pairwise_matrix, DistanceMatrix, GiniPairCache, Metric};
pub use rank::{midrank, RankVector};
