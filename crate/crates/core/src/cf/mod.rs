//! Memory-based collaborative filtering: similarity measures over co-rated
//! entries, neighborhood selection, and user-/item-based prediction.

pub mod cache;
mod neighbors;
mod predict;
mod similarity;
mod strategy;

pub use neighbors::{knn, neighbor_order, top_k, KnnOptions, Neighbor, NeighborSet};
pub use predict::{
    predict_item_based, predict_user_based, Baselines, Fallback, NeighborRating, Prediction,
    Variant, DENOMINATOR_EPSILON,
};
pub use similarity::{
    average_ranks, cosine, item_adjusted_cosine, pearson, spearman, Cosine, Pearson, Similarity,
    SimilarityScore, Spearman,
};
pub use strategy::{
    item_similarity_pairs, CfParams, CfStrategy, FittedModel, ItemKnn, StrategyRegistry, UserKnn,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfError {
    #[error("unknown CF strategy `{0}` (available: {1})")]
    UnknownStrategy(String, String),
    #[error("similarity cache line {line}: {message}")]
    Cache { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
