//! Named, interchangeable CF strategies.
//!
//! A [`CfStrategy`] is registered under the name the CLI's `--measure` flag
//! uses. Fitting one against a [`Dataset`] yields a [`FittedModel`] that
//! answers prediction requests for any (user, item) pair.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::neighbors::{top_k, Neighbor};
use super::predict::{
    predict_item_based, predict_user_based, Baselines, NeighborRating, Prediction, Variant,
};
use super::similarity::{
    item_adjusted_cosine, Cosine, Pearson, Similarity, SimilarityScore, Spearman,
};
use super::CfError;
use crate::model::{Dataset, ItemId, SparseVector, UserId};

/// Neighborhood and prediction settings shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfParams {
    pub k: usize,
    pub min_overlap: usize,
    pub variant: Variant,
    pub exclude_negative: bool,
    /// Divide by Σsim rather than Σ|sim| (user-based only).
    pub signed_denominator: bool,
}

impl Default for CfParams {
    fn default() -> Self {
        CfParams {
            k: 30,
            min_overlap: 2,
            variant: Variant::MeanCentered,
            exclude_negative: false,
            signed_denominator: false,
        }
    }
}

pub trait CfStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn describe(&self) -> &'static str;

    fn fit<'a>(&self, data: &'a Dataset, params: &CfParams) -> Box<dyn FittedModel + 'a>;
}

pub trait FittedModel: Send + Sync {
    fn predict(&self, user: UserId, item: ItemId) -> Prediction {
        self.predict_items(user, &[item]).remove(0)
    }

    /// Predictions for `items`, in the same order.
    fn predict_items(&self, user: UserId, items: &[ItemId]) -> Vec<Prediction>;

    /// Whether some other user shares at least `min_overlap` rated items with
    /// `user`. False means no neighborhood can form (cold start).
    fn has_support(&self, user: UserId) -> bool;
}

/// Strategies by name.
#[derive(Clone)]
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Arc<dyn CfStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// `pearson`, `cosine`, `spearman` (user-based) and `itemcos` (item-based).
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(UserKnn::new(Arc::new(Pearson))));
        r.register(Arc::new(UserKnn::new(Arc::new(Cosine))));
        r.register(Arc::new(UserKnn::new(Arc::new(Spearman))));
        r.register(Arc::new(ItemKnn));
        r
    }

    pub fn register(&mut self, strategy: Arc<dyn CfStrategy>) {
        self.entries.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CfStrategy>, CfError> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| CfError::UnknownStrategy(name.to_string(), self.names().join(", ")))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

/// Per-user vectors and means of the active users, indexed by position.
struct UserTable {
    ids: Vec<UserId>,
    pos: HashMap<UserId, usize>,
    vectors: Vec<SparseVector>,
    means: Vec<f64>,
}

impl UserTable {
    fn build(data: &Dataset) -> Self {
        let ids: Vec<UserId> = data.active_users().collect();
        let vectors: Vec<SparseVector> = ids
            .iter()
            .map(|&u| data.user_sparse(u).expect("active user exists"))
            .collect();
        let means = vectors.iter().map(|v| v.mean().unwrap_or(0.0)).collect();
        let pos = ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        UserTable {
            ids,
            pos,
            vectors,
            means,
        }
    }

    fn mean(&self, user: UserId) -> Option<f64> {
        self.pos.get(&user).map(|&p| self.means[p])
    }

    fn has_support(&self, user: UserId, min_overlap: usize) -> bool {
        let Some(&p) = self.pos.get(&user) else {
            return false;
        };
        let need = min_overlap.max(1);
        let target = &self.vectors[p];
        self.vectors
            .iter()
            .enumerate()
            .any(|(q, v)| q != p && target.co_rated(v).len() >= need)
    }
}

fn item_means(data: &Dataset) -> HashMap<ItemId, f64> {
    data.active_items()
        .map(|i| {
            let v = data.item_sparse(i).expect("active item exists");
            (i, v.mean().unwrap_or(0.0))
        })
        .collect()
}

/// User-based kNN under a pluggable similarity measure.
pub struct UserKnn {
    measure: Arc<dyn Similarity>,
}

impl UserKnn {
    pub fn new(measure: Arc<dyn Similarity>) -> Self {
        UserKnn { measure }
    }
}

impl CfStrategy for UserKnn {
    fn name(&self) -> &'static str {
        self.measure.name()
    }

    fn describe(&self) -> &'static str {
        "user-based kNN"
    }

    fn fit<'a>(&self, data: &'a Dataset, params: &CfParams) -> Box<dyn FittedModel + 'a> {
        let users = UserTable::build(data);
        let mut raters: HashMap<ItemId, Vec<(usize, f64)>> = HashMap::new();
        for (p, v) in users.vectors.iter().enumerate() {
            for (item, rating) in v.iter() {
                raters.entry(item).or_default().push((p, rating));
            }
        }
        Box::new(FittedUserKnn {
            measure: Arc::clone(&self.measure),
            params: *params,
            users,
            raters,
            item_means: item_means(data),
            global_mean: data.global_mean(),
        })
    }
}

struct FittedUserKnn {
    measure: Arc<dyn Similarity>,
    params: CfParams,
    users: UserTable,
    raters: HashMap<ItemId, Vec<(usize, f64)>>,
    item_means: HashMap<ItemId, f64>,
    global_mean: Option<f64>,
}

impl FittedModel for FittedUserKnn {
    fn predict_items(&self, user: UserId, items: &[ItemId]) -> Vec<Prediction> {
        let target = self.users.pos.get(&user).copied();
        let sims: Vec<Option<SimilarityScore>> = match target {
            Some(p) => self
                .users
                .vectors
                .iter()
                .enumerate()
                .map(|(q, v)| {
                    if q == p {
                        None
                    } else {
                        self.measure
                            .similarity(&self.users.vectors[p], v, self.params.min_overlap)
                            .filter(|s| !self.params.exclude_negative || s.value >= 0.0)
                    }
                })
                .collect(),
            None => Vec::new(),
        };
        let user_mean = self.users.mean(user);

        items
            .iter()
            .map(|&item| {
                let candidates: Vec<Neighbor> = self
                    .raters
                    .get(&item)
                    .map(|rs| {
                        rs.iter()
                            .filter_map(|&(q, _)| {
                                sims.get(q).copied().flatten().map(|score| Neighbor {
                                    id: self.users.ids[q],
                                    score,
                                })
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let neighbors: Vec<NeighborRating> = top_k(candidates, self.params.k.max(1))
                    .into_iter()
                    .map(|n| {
                        let q = self.users.pos[&n.id];
                        NeighborRating {
                            id: n.id,
                            similarity: n.score.value,
                            rating: self.users.vectors[q].get(item).expect("rater rated item"),
                            mean: self.users.means[q],
                        }
                    })
                    .collect();
                predict_user_based(
                    user,
                    item,
                    &neighbors,
                    self.params.variant,
                    Baselines {
                        user_mean,
                        item_mean: self.item_means.get(&item).copied(),
                        global_mean: self.global_mean,
                    },
                    self.params.signed_denominator,
                )
            })
            .collect()
    }

    fn has_support(&self, user: UserId) -> bool {
        self.users.has_support(user, self.params.min_overlap)
    }
}

/// Item-based kNN over adjusted-cosine item similarities.
pub struct ItemKnn;

impl CfStrategy for ItemKnn {
    fn name(&self) -> &'static str {
        "itemcos"
    }

    fn describe(&self) -> &'static str {
        "item-based kNN, adjusted cosine"
    }

    fn fit<'a>(&self, data: &'a Dataset, params: &CfParams) -> Box<dyn FittedModel + 'a> {
        let users = UserTable::build(data);
        let items: Vec<ItemId> = data.active_items().collect();
        let columns: Vec<SparseVector> = items
            .iter()
            .map(|&i| data.item_sparse(i).expect("active item exists"))
            .collect();
        let item_means: Vec<f64> = columns.iter().map(|c| c.mean().unwrap_or(0.0)).collect();
        let sims = ItemSimilarities::compute(&columns, &users, params.min_overlap);
        Box::new(FittedItemKnn {
            params: *params,
            item_pos: items.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
            items,
            item_means,
            sims,
            users,
            global_mean: data.global_mean(),
        })
    }
}

/// Dense symmetric item-item similarity table; NaN marks undefined.
pub(crate) struct ItemSimilarities {
    n: usize,
    values: Vec<f64>,
    overlaps: Vec<u32>,
}

impl ItemSimilarities {
    fn compute(columns: &[SparseVector], users: &UserTable, min_overlap: usize) -> Self {
        let n = columns.len();
        let mean = |u: UserId| users.mean(u).unwrap_or(0.0);
        let rows: Vec<Vec<(f64, u32)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| {
                        item_adjusted_cosine(&columns[i], &columns[j], mean, min_overlap)
                            .map_or((f64::NAN, 0), |s| (s.value, s.overlap as u32))
                    })
                    .collect()
            })
            .collect();
        let mut values = vec![f64::NAN; n * n];
        let mut overlaps = vec![0u32; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, (v, o)) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
                overlaps[i * n + j] = o;
                overlaps[j * n + i] = o;
            }
        }
        ItemSimilarities {
            n,
            values,
            overlaps,
        }
    }

    fn get(&self, i: usize, j: usize) -> Option<SimilarityScore> {
        let v = self.values[i * self.n + j];
        (!v.is_nan()).then(|| SimilarityScore {
            value: v,
            overlap: self.overlaps[i * self.n + j] as usize,
        })
    }
}

struct FittedItemKnn {
    params: CfParams,
    items: Vec<ItemId>,
    item_pos: HashMap<ItemId, usize>,
    item_means: Vec<f64>,
    sims: ItemSimilarities,
    users: UserTable,
    global_mean: Option<f64>,
}

impl FittedItemKnn {
    /// Defined similarities as `(item_a, item_b, score)` with `item_a < item_b`.
    fn pairs(&self) -> Vec<(ItemId, ItemId, SimilarityScore)> {
        let n = self.items.len();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                self.sims
                    .get(i, j)
                    .map(|s| (self.items[i], self.items[j], s))
            })
            .collect()
    }
}

impl FittedModel for FittedItemKnn {
    fn predict_items(&self, user: UserId, items: &[ItemId]) -> Vec<Prediction> {
        let empty = SparseVector::default();
        let rated = self
            .users
            .pos
            .get(&user)
            .map_or(&empty, |&p| &self.users.vectors[p]);
        let user_mean = self.users.mean(user);
        items
            .iter()
            .map(|&item| {
                let target = self.item_pos.get(&item).copied();
                let candidates: Vec<Neighbor> = match target {
                    Some(t) => rated
                        .ids()
                        .filter_map(|j| {
                            let jp = *self.item_pos.get(&j)?;
                            if jp == t {
                                return None;
                            }
                            let score = self.sims.get(t, jp)?;
                            (!self.params.exclude_negative || score.value >= 0.0)
                                .then_some(Neighbor { id: j, score })
                        })
                        .collect(),
                    None => Vec::new(),
                };
                let neighbors: Vec<NeighborRating> = top_k(candidates, self.params.k.max(1))
                    .into_iter()
                    .map(|n| NeighborRating {
                        id: n.id,
                        similarity: n.score.value,
                        rating: rated.get(n.id).expect("user rated neighbor item"),
                        mean: self.item_means[self.item_pos[&n.id]],
                    })
                    .collect();
                predict_item_based(
                    user,
                    item,
                    &neighbors,
                    Baselines {
                        user_mean,
                        item_mean: target.map(|t| self.item_means[t]),
                        global_mean: self.global_mean,
                    },
                )
            })
            .collect()
    }

    fn has_support(&self, user: UserId) -> bool {
        self.users.has_support(user, self.params.min_overlap)
    }
}

/// All defined item-item adjusted-cosine similarities of `data`, for caching.
pub fn item_similarity_pairs(
    data: &Dataset,
    min_overlap: usize,
) -> Vec<(ItemId, ItemId, SimilarityScore)> {
    let params = CfParams {
        min_overlap,
        ..Default::default()
    };
    let users = UserTable::build(data);
    let items: Vec<ItemId> = data.active_items().collect();
    let columns: Vec<SparseVector> = items
        .iter()
        .map(|&i| data.item_sparse(i).expect("item"))
        .collect();
    let fitted = FittedItemKnn {
        params,
        item_pos: items.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
        item_means: columns.iter().map(|c| c.mean().unwrap_or(0.0)).collect(),
        sims: ItemSimilarities::compute(&columns, &users, min_overlap),
        items,
        users,
        global_mean: data.global_mean(),
    };
    fitted.pairs()
}
