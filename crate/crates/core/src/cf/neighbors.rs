use std::cmp::Ordering;

use serde::Serialize;

use super::similarity::{Similarity, SimilarityScore};
use crate::model::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: u32,
    pub score: SimilarityScore,
}

/// Descending similarity, then ascending id.
pub fn neighbor_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.score
        .value
        .total_cmp(&a.score.value)
        .then(a.id.cmp(&b.id))
}

/// Keeps the `k` best under [`neighbor_order`], sorted.
pub fn top_k(mut candidates: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k, neighbor_order);
        candidates.truncate(k);
    }
    candidates.sort_by(neighbor_order);
    candidates
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborSet {
    pub target: u32,
    pub k: usize,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnnOptions {
    pub k: usize,
    pub min_overlap: usize,
    /// Drop neighbors with negative similarity.
    pub exclude_negative: bool,
}

impl Default for KnnOptions {
    fn default() -> Self {
        KnnOptions {
            k: 30,
            min_overlap: 2,
            exclude_negative: false,
        }
    }
}

/// The `k` candidates most similar to `target`. Candidates whose similarity
/// is undefined, and the target itself, are skipped.
pub fn knn<'a>(
    target: u32,
    target_vector: &SparseVector,
    candidates: impl IntoIterator<Item = (u32, &'a SparseVector)>,
    measure: &dyn Similarity,
    opts: KnnOptions,
) -> NeighborSet {
    let k = opts.k.max(1);
    let scored: Vec<Neighbor> = candidates
        .into_iter()
        .filter(|(id, _)| *id != target)
        .filter_map(|(id, v)| {
            measure
                .similarity(target_vector, v, opts.min_overlap)
                .map(|score| Neighbor { id, score })
        })
        .filter(|n| !opts.exclude_negative || n.score.value >= 0.0)
        .collect();
    NeighborSet {
        target,
        k,
        neighbors: top_k(scored, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::similarity::Pearson;

    fn n(id: u32, value: f64) -> Neighbor {
        Neighbor {
            id,
            score: SimilarityScore { value, overlap: 3 },
        }
    }

    #[test]
    fn ordering_breaks_ties_by_id() {
        let got = top_k(vec![n(5, 0.5), n(2, 0.9), n(3, 0.5), n(1, -0.2)], 3);
        assert_eq!(got.iter().map(|x| x.id).collect::<Vec<_>>(), vec![2, 3, 5]);
    }

    #[test]
    fn k_larger_than_candidates() {
        let t = SparseVector::from_pairs([(1, 1.0), (2, 2.0), (3, 3.0)]);
        let a = SparseVector::from_pairs([(1, 2.0), (2, 3.0), (3, 5.0)]);
        let b = SparseVector::from_pairs([(1, 5.0), (2, 3.0), (3, 1.0)]);
        let flat = SparseVector::from_pairs([(1, 3.0), (2, 3.0), (3, 3.0)]);
        let set = knn(
            9,
            &t,
            [(1, &a), (2, &b), (3, &flat), (9, &t)],
            &Pearson,
            KnnOptions {
                k: 10,
                ..Default::default()
            },
        );
        assert_eq!(
            set.neighbors.iter().map(|x| x.id).collect::<Vec<_>>(),
            vec![1, 2]
        );

        let positive = knn(
            9,
            &t,
            [(1, &a), (2, &b)],
            &Pearson,
            KnnOptions {
                exclude_negative: true,
                ..Default::default()
            },
        );
        assert_eq!(positive.neighbors.len(), 1);
    }

    #[test]
    fn equal_similarity_lower_id_first() {
        let t = SparseVector::from_pairs([(1, 1.0), (2, 2.0)]);
        let same = SparseVector::from_pairs([(1, 2.0), (2, 4.0)]);
        let set = knn(
            0,
            &t,
            [(8, &same), (4, &same)],
            &Pearson,
            KnnOptions::default(),
        );
        assert_eq!(
            set.neighbors.iter().map(|x| x.id).collect::<Vec<_>>(),
            vec![4, 8]
        );
    }
}
