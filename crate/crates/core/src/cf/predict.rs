use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::model::{ItemId, UserId};

pub const MIN_RATING: f64 = 1.0;
pub const MAX_RATING: f64 = 5.0;
/// Weight sums below this are treated as degenerate.
pub const DENOMINATOR_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    UserMean,
    ItemMean,
    GlobalMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub user_id: UserId,
    pub item_id: ItemId,
    /// Always within [1, 5].
    pub value: f64,
    /// Neighbors that contributed.
    pub support: usize,
    pub fallback: Fallback,
}

/// User-based prediction variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Σ sim·v / Σ|sim|
    Plain,
    /// ū + Σ sim·(v − v̄) / Σ|sim|
    MeanCentered,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::MeanCentered => "mean-centered",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "plain" => Ok(Variant::Plain),
            "mean-centered" | "mean_centered" => Ok(Variant::MeanCentered),
            other => Err(format!(
                "unknown variant `{other}` (expected plain or mean-centered)"
            )),
        }
    }
}

/// One neighbor's contribution: its similarity to the target, the rating it
/// gives, and the mean that rating is centered on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborRating {
    pub id: u32,
    pub similarity: f64,
    pub rating: f64,
    pub mean: f64,
}

/// Means used as prediction bases and fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Baselines {
    pub user_mean: Option<f64>,
    pub item_mean: Option<f64>,
    pub global_mean: Option<f64>,
}

/// Midpoint of the scale, used only when even the global mean is unknown.
const SCALE_MIDPOINT: f64 = 3.0;

fn clamp(v: f64) -> f64 {
    v.clamp(MIN_RATING, MAX_RATING)
}

fn fall_back(user_id: UserId, item_id: ItemId, chain: &[(Option<f64>, Fallback)]) -> Prediction {
    let (value, fallback) = chain
        .iter()
        .find_map(|(v, f)| v.map(|v| (v, *f)))
        .unwrap_or((SCALE_MIDPOINT, Fallback::GlobalMean));
    Prediction {
        user_id,
        item_id,
        value: clamp(value),
        support: 0,
        fallback,
    }
}

fn weighted_deviation(
    neighbors: &[NeighborRating],
    signed_denominator: bool,
    centered: bool,
) -> Option<f64> {
    let den: f64 = if signed_denominator {
        neighbors.iter().map(|n| n.similarity).sum()
    } else {
        neighbors.iter().map(|n| n.similarity.abs()).sum()
    };
    if neighbors.is_empty() || den.abs() < DENOMINATOR_EPSILON {
        return None;
    }
    let num: f64 = neighbors
        .iter()
        .map(|n| {
            n.similarity
                * if centered {
                    n.rating - n.mean
                } else {
                    n.rating
                }
        })
        .sum();
    Some(num / den)
}

/// User-based neighborhood prediction. Degenerate cases fall back to user
/// mean, then item mean, then global mean.
///
/// `signed_denominator` divides by Σsim instead of Σ|sim|.
pub fn predict_user_based(
    user_id: UserId,
    item_id: ItemId,
    neighbors: &[NeighborRating],
    variant: Variant,
    baselines: Baselines,
    signed_denominator: bool,
) -> Prediction {
    let chain = [
        (baselines.user_mean, Fallback::UserMean),
        (baselines.item_mean, Fallback::ItemMean),
        (baselines.global_mean, Fallback::GlobalMean),
    ];
    let value = match variant {
        Variant::Plain => weighted_deviation(neighbors, signed_denominator, false),
        Variant::MeanCentered => baselines
            .user_mean
            .and_then(|m| weighted_deviation(neighbors, signed_denominator, true).map(|d| m + d)),
    };
    match value {
        Some(v) if v.is_finite() => Prediction {
            user_id,
            item_id,
            value: clamp(v),
            support: neighbors.len(),
            fallback: Fallback::None,
        },
        _ => fall_back(user_id, item_id, &chain),
    }
}

/// Item-based prediction: target item mean plus the similarity-weighted
/// deviations of the user's ratings of neighbor items from those items' means.
/// Degenerate cases fall back to item mean, then user mean, then global mean.
pub fn predict_item_based(
    user_id: UserId,
    item_id: ItemId,
    neighbors: &[NeighborRating],
    baselines: Baselines,
) -> Prediction {
    let chain = [
        (baselines.item_mean, Fallback::ItemMean),
        (baselines.user_mean, Fallback::UserMean),
        (baselines.global_mean, Fallback::GlobalMean),
    ];
    let value = baselines
        .item_mean
        .and_then(|m| weighted_deviation(neighbors, false, true).map(|d| m + d));
    match value {
        Some(v) if v.is_finite() => Prediction {
            user_id,
            item_id,
            value: clamp(v),
            support: neighbors.len(),
            fallback: Fallback::None,
        },
        _ => fall_back(user_id, item_id, &chain),
    }
}
