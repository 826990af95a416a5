use serde::Serialize;

use crate::model::{SparseVector, UserId};

/// A defined similarity and the number of co-rated entries behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub overlap: usize,
}

impl SimilarityScore {
    fn clamped(value: f64, overlap: usize) -> Option<Self> {
        value.is_finite().then(|| SimilarityScore {
            value: value.clamp(-1.0, 1.0),
            overlap,
        })
    }
}

/// A user-user similarity measure over sparse rating vectors.
pub trait Similarity: Send + Sync {
    fn name(&self) -> &'static str;

    /// `None` when undefined: fewer than `min_overlap` co-rated items or a
    /// degenerate (zero-variance / zero-norm) co-rated sub-vector.
    fn similarity(
        &self,
        a: &SparseVector,
        b: &SparseVector,
        min_overlap: usize,
    ) -> Option<SimilarityScore>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Pearson;

#[derive(Debug, Clone, Copy, Default)]
pub struct Cosine;

#[derive(Debug, Clone, Copy, Default)]
pub struct Spearman;

impl Similarity for Pearson {
    fn name(&self) -> &'static str {
        "pearson"
    }

    fn similarity(
        &self,
        a: &SparseVector,
        b: &SparseVector,
        min_overlap: usize,
    ) -> Option<SimilarityScore> {
        pearson(a, b, min_overlap)
    }
}

impl Similarity for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
    }

    fn similarity(
        &self,
        a: &SparseVector,
        b: &SparseVector,
        min_overlap: usize,
    ) -> Option<SimilarityScore> {
        cosine(a, b).filter(|s| s.overlap >= min_overlap)
    }
}

impl Similarity for Spearman {
    fn name(&self) -> &'static str {
        "spearman"
    }

    fn similarity(
        &self,
        a: &SparseVector,
        b: &SparseVector,
        min_overlap: usize,
    ) -> Option<SimilarityScore> {
        spearman(a, b, min_overlap)
    }
}

/// Pearson correlation of two equal-length samples; `None` on zero variance.
pub(crate) fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut num, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        num += dx * dy;
        sx += dx * dx;
        sy += dy * dy;
    }
    if sx <= 0.0 || sy <= 0.0 {
        return None;
    }
    Some(num / (sx.sqrt() * sy.sqrt()))
}

fn split(co: &[(u32, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    co.iter().map(|&(_, x, y)| (x, y)).unzip()
}

/// Centered Pearson over co-rated items only, means taken over the co-rated
/// sub-vectors.
pub fn pearson(a: &SparseVector, b: &SparseVector, min_overlap: usize) -> Option<SimilarityScore> {
    let co = a.co_rated(b);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let (xs, ys) = split(&co);
    SimilarityScore::clamped(correlation(&xs, &ys)?, co.len())
}

/// Uncentered cosine over co-rated items.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> Option<SimilarityScore> {
    let co = a.co_rated(b);
    if co.is_empty() {
        return None;
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for &(_, x, y) in &co {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return None;
    }
    SimilarityScore::clamped(dot / (na.sqrt() * nb.sqrt()), co.len())
}

/// 1-based ranks, ties receiving the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the per-user ranks of the co-rated sub-vectors.
pub fn spearman(a: &SparseVector, b: &SparseVector, min_overlap: usize) -> Option<SimilarityScore> {
    let co = a.co_rated(b);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let (xs, ys) = split(&co);
    SimilarityScore::clamped(
        correlation(&average_ranks(&xs), &average_ranks(&ys))?,
        co.len(),
    )
}

/// Item-item cosine over user-mean-centered ratings of the users who rated
/// both items. `user_mean` must be the mean over each user's full rating set.
pub fn item_adjusted_cosine(
    i: &SparseVector,
    j: &SparseVector,
    user_mean: impl Fn(UserId) -> f64,
    min_overlap: usize,
) -> Option<SimilarityScore> {
    let co = i.co_rated(j);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let (mut dot, mut ni, mut nj) = (0.0, 0.0, 0.0);
    for &(user, ri, rj) in &co {
        let m = user_mean(user);
        let (di, dj) = (ri - m, rj - m);
        dot += di * dj;
        ni += di * di;
        nj += dj * dj;
    }
    if ni <= 0.0 || nj <= 0.0 {
        return None;
    }
    SimilarityScore::clamped(dot / (ni.sqrt() * nj.sqrt()), co.len())
}
