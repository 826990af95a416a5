//! Context-aware top-N recommendation.
//!
//! A run pre-filters the corpus to the query context, derives genre weights
//! from what is left, fits a CF strategy on the same sub-corpus, and ranks the
//! user's unrated items by
//!
//! ```text
//! fused = alpha * (cf - 1) / 4 + (1 - alpha) * genre_score
//! ```
//!
//! Both components live in `[0, 1]`, so `fused` does too.

mod weights;

pub use weights::{
    genre_frequencies, genre_matrix_from_frequencies, genre_score, weights_from_frequency,
    FrequencyJudgments, GenreAggregate, GenreWeights, WeightProvenance, WeightSource,
};

use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ahp::{AhpError, PriorityVector};
use crate::cf::{CfError, CfParams, CfStrategy, FittedModel, Prediction, StrategyRegistry};
use crate::contextfilter::{prefilter, ContextQuery};
use crate::model::{Dataset, ItemId, SourceTag, UserId};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("user {0} not found")]
    UserNotFound(UserId),
    #[error("cold start: user {user} shares at least {min_overlap} rated items with no other user{}", in_context(.context))]
    ColdStart {
        user: UserId,
        min_overlap: usize,
        /// The query that emptied the neighborhood, when there was one.
        context: Option<String>,
    },
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("n must be at least 1")]
    InvalidN,
    #[error("genre weights: {0}")]
    Weights(String),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Ahp(#[from] AhpError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn in_context(context: &Option<String>) -> String {
    context
        .as_ref()
        .map(|c| format!(" in context `{c}`"))
        .unwrap_or_default()
}

pub const DEFAULT_ALPHA: f64 = 0.7;

/// Everything that shapes a recommendation besides the data and the user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub measure: String,
    #[serde(flatten)]
    pub cf: CfParams,
    pub n: usize,
    pub alpha: f64,
    pub weights: WeightSource,
    pub genre_aggregate: GenreAggregate,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            measure: "pearson".into(),
            cf: CfParams::default(),
            n: 10,
            alpha: DEFAULT_ALPHA,
            weights: WeightSource::default(),
            genre_aggregate: GenreAggregate::default(),
        }
    }
}

impl EngineConfig {
    /// Defaults for a corpus: MovieLens carries no context, so the blend is pure CF.
    pub fn for_source(source: SourceTag) -> Self {
        EngineConfig {
            alpha: if source == SourceTag::Movielens {
                1.0
            } else {
                DEFAULT_ALPHA
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(PipelineError::InvalidAlpha(self.alpha));
        }
        if self.n == 0 {
            return Err(PipelineError::InvalidN);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationEntry {
    pub item_id: ItemId,
    pub fused: f64,
    pub cf: f64,
    pub genre: f64,
    #[serde(skip)]
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationList {
    pub user_id: UserId,
    pub context: ContextQuery,
    pub n: usize,
    pub alpha: f64,
    pub entries: Vec<RecommendationEntry>,
}

impl RecommendationList {
    pub fn items(&self) -> Vec<ItemId> {
        self.entries.iter().map(|e| e.item_id).collect()
    }
}

/// Blends a 1..=5 CF prediction with a `[0, 1]` genre score.
pub fn fuse(alpha: f64, prediction: f64, genre: f64) -> f64 {
    alpha * (prediction - 1.0) / 4.0 + (1.0 - alpha) * genre
}

/// Descending `score`, ties by ascending item id.
pub fn rank_order(a: (f64, ItemId), b: (f64, ItemId)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The context-filtered corpus with its genre weights, ready to fit.
pub struct Prepared {
    pub query: ContextQuery,
    pub data: Dataset,
    pub weights: GenreWeights,
    /// Set when the weights came from rating frequencies.
    pub judgments: Option<FrequencyJudgments>,
    pub config: EngineConfig,
    strategy: Arc<dyn CfStrategy>,
}

impl Prepared {
    pub fn new(
        d: &Dataset,
        query: &ContextQuery,
        config: &EngineConfig,
        registry: &StrategyRegistry,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let strategy = registry.get(&config.measure)?;
        let data = prefilter(d, query);
        let (weights, judgments) = match &config.weights {
            // an empty sub-corpus has no frequencies; fall back to flat weights
            WeightSource::Frequency(_)
                if data.ratings().is_empty() || data.genre_catalog().is_empty() =>
            {
                let flat = GenreWeights::from_priorities(
                    data.genre_catalog(),
                    &PriorityVector::uniform(data.genre_catalog().len()),
                    WeightProvenance::EigenFromFrequency,
                )?;
                (flat, None)
            }
            WeightSource::Frequency(scale) => {
                let (w, j) = weights_from_frequency(&data, *scale)?;
                (w, Some(j))
            }
            WeightSource::Table(path) => {
                (GenreWeights::load_table(data.genre_catalog(), path)?, None)
            }
        };
        Ok(Prepared {
            query: *query,
            data,
            weights,
            judgments,
            config: config.clone(),
            strategy,
        })
    }

    /// Same corpus and config with explicit weights.
    pub fn with_weights(mut self, weights: GenreWeights) -> Self {
        self.weights = weights;
        self.judgments = None;
        self
    }

    pub fn fit(&self) -> Engine<'_> {
        Engine {
            prepared: self,
            model: self.strategy.fit(&self.data, &self.config.cf),
        }
    }
}

pub struct Engine<'a> {
    prepared: &'a Prepared,
    model: Box<dyn FittedModel + 'a>,
}

impl Engine<'_> {
    pub fn prepared(&self) -> &Prepared {
        self.prepared
    }

    pub fn model(&self) -> &dyn FittedModel {
        self.model.as_ref()
    }

    /// Top-n of the user's unrated active items.
    pub fn recommend(&self, user: UserId) -> Result<RecommendationList, PipelineError> {
        let p = self.prepared;
        let d = &p.data;
        if !d.has_user(user) {
            return Err(PipelineError::UserNotFound(user));
        }
        if !self.model.has_support(user) {
            return Err(PipelineError::ColdStart {
                user,
                min_overlap: p.config.cf.min_overlap,
                context: (!p.query.is_empty()).then(|| p.query.to_string()),
            });
        }
        let seen: std::collections::HashSet<ItemId> =
            d.ratings_of_user(user).map(|r| r.item_id).collect();
        let candidates: Vec<ItemId> = d.active_items().filter(|i| !seen.contains(i)).collect();
        let predictions = self.model.predict_items(user, &candidates);
        let alpha = p.config.alpha;
        let mut genreless = 0usize;
        let mut entries: Vec<RecommendationEntry> = predictions
            .into_iter()
            .map(|pred| {
                let movie = d.movie(pred.item_id).expect("candidate is in the catalog");
                if movie.genres.is_empty() {
                    genreless += 1;
                }
                let genre = genre_score(movie, &p.weights, p.config.genre_aggregate);
                RecommendationEntry {
                    item_id: pred.item_id,
                    fused: fuse(alpha, pred.value, genre),
                    cf: pred.value,
                    genre,
                    prediction: pred,
                }
            })
            .collect();
        if genreless > 0 && alpha < 1.0 {
            log::warn!("{genreless} candidate items have no genres and score 0 on genre");
        }
        entries.sort_by(|a, b| rank_order((a.fused, a.item_id), (b.fused, b.item_id)));
        entries.truncate(p.config.n);
        Ok(RecommendationList {
            user_id: user,
            context: p.query,
            n: p.config.n,
            alpha,
            entries,
        })
    }
}

/// One-shot recommendation: pre-filter, weigh, fit, rank.
pub fn recommend(
    d: &Dataset,
    user: UserId,
    query: &ContextQuery,
    config: &EngineConfig,
    registry: &StrategyRegistry,
) -> Result<RecommendationList, PipelineError> {
    let prepared = Prepared::new(d, query, config, registry)?;
    let list = prepared.fit().recommend(user);
    list
}
