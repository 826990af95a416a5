//! Domain types shared by every other module.
//!
//! Everything is validated at construction: a [`Rating`] is always in 1..=5,
//! a [`ContextVector`] only holds codes inside each dimension's codebook, and a
//! [`Dataset`] has checked referential integrity and built its per-user and
//! per-item indexes. Downstream code never re-checks these ranges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type UserId = u32;
pub type ItemId = u32;
/// Index into a dataset's genre catalog.
pub type GenreId = u16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("rating {0} outside 1..=5")]
    InvalidRating(i64),
    #[error("context dimension {dim} has code {value}, expected 1..={max} or -1")]
    InvalidContext {
        dim: &'static str,
        value: i64,
        max: u8,
    },
    #[error("unknown context dimension `{0}`")]
    UnknownDimension(String),
    #[error("ids must be positive, got {0}")]
    InvalidId(i64),
    #[error("rating {record} references unknown user {user}")]
    DanglingUser { user: UserId, record: String },
    #[error("rating {record} references unknown item {item}")]
    DanglingItem { item: ItemId, record: String },
    #[error("movie {item} references genre {genre} outside a catalog of {catalog}")]
    UnknownGenre {
        item: ItemId,
        genre: GenreId,
        catalog: usize,
    },
    #[error("duplicate rating tuple {0}")]
    DuplicateRating(String),
    #[error("duplicate user profile {0}")]
    DuplicateUser(UserId),
    #[error("duplicate movie {0}")]
    DuplicateMovie(ItemId),
    #[error("user {0} not found")]
    UserNotFound(UserId),
    #[error("item {0} not found")]
    ItemNotFound(ItemId),
}

/// A rating on the 1..=5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rating(u8);

impl Rating {
    pub fn new(value: i64) -> Result<Self, ModelError> {
        if (1..=5).contains(&value) {
            Ok(Rating(value as u8))
        } else {
            Err(ModelError::InvalidRating(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The twelve coded context dimensions of a CoMoDa-style record, in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContextDim {
    Time,
    Daytype,
    Season,
    Location,
    Weather,
    Social,
    EndEmo,
    DominantEmo,
    Mood,
    Physical,
    Decision,
    Interaction,
}

const EMOTIONS: &[&str] = &[
    "Sad",
    "Happy",
    "Scared",
    "Surprised",
    "Angry",
    "Disgusted",
    "Neutral",
];

impl ContextDim {
    pub const ALL: [ContextDim; 12] = [
        ContextDim::Time,
        ContextDim::Daytype,
        ContextDim::Season,
        ContextDim::Location,
        ContextDim::Weather,
        ContextDim::Social,
        ContextDim::EndEmo,
        ContextDim::DominantEmo,
        ContextDim::Mood,
        ContextDim::Physical,
        ContextDim::Decision,
        ContextDim::Interaction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column / query name.
    pub fn name(self) -> &'static str {
        match self {
            ContextDim::Time => "time",
            ContextDim::Daytype => "daytype",
            ContextDim::Season => "season",
            ContextDim::Location => "location",
            ContextDim::Weather => "weather",
            ContextDim::Social => "social",
            ContextDim::EndEmo => "endEmo",
            ContextDim::DominantEmo => "dominantEmo",
            ContextDim::Mood => "mood",
            ContextDim::Physical => "physical",
            ContextDim::Decision => "decision",
            ContextDim::Interaction => "interaction",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        ContextDim::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| ModelError::UnknownDimension(name.to_string()))
    }

    /// Code labels; code `c` is `labels()[c - 1]`.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            ContextDim::Time => &["Morning", "Afternoon", "Evening", "Night"],
            ContextDim::Daytype => &["Working day", "Weekend", "Holiday"],
            ContextDim::Season => &["Spring", "Summer", "Autumn", "Winter"],
            ContextDim::Location => &["Home", "Public place", "Friend's house"],
            ContextDim::Weather => &["Sunny / clear", "Rainy", "Stormy", "Snowy", "Cloudy"],
            ContextDim::Social => &[
                "Alone",
                "My partner",
                "Friends",
                "Colleagues",
                "Parents",
                "Public",
                "My family",
            ],
            ContextDim::EndEmo | ContextDim::DominantEmo => EMOTIONS,
            ContextDim::Mood => &["Positive", "Neutral", "Negative"],
            ContextDim::Physical => &["Healthy", "Ill"],
            ContextDim::Decision => &[
                "User decided which movie to watch",
                "User was given a movie",
            ],
            ContextDim::Interaction => &[
                "first interaction with a movie",
                "n-th interaction with a movie",
            ],
        }
    }

    pub fn max_code(self) -> u8 {
        self.labels().len() as u8
    }

    pub fn label(self, code: u8) -> Option<&'static str> {
        self.labels()
            .get(usize::from(code).checked_sub(1)?)
            .copied()
    }

    /// Validates a raw code; `-1` is the missing marker.
    pub fn check(self, raw: i64) -> Result<Option<u8>, ModelError> {
        if raw == MISSING_CODE {
            Ok(None)
        } else if raw >= 1 && raw <= i64::from(self.max_code()) {
            Ok(Some(raw as u8))
        } else {
            Err(ModelError::InvalidContext {
                dim: self.name(),
                value: raw,
                max: self.max_code(),
            })
        }
    }
}

impl fmt::Display for ContextDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw-file marker for a missing context value or genre slot.
pub const MISSING_CODE: i64 = -1;

/// The situation a rating was given in. `None` is the (only) missing marker.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct ContextVector {
    codes: [Option<u8>; 12],
}

impl ContextVector {
    /// Every dimension missing.
    pub fn missing() -> Self {
        Self::default()
    }

    /// Builds from raw file codes in [`ContextDim::ALL`] order.
    pub fn from_codes(raw: [i64; 12]) -> Result<Self, ModelError> {
        let mut codes = [None; 12];
        for (dim, value) in ContextDim::ALL.into_iter().zip(raw) {
            codes[dim.index()] = dim.check(value)?;
        }
        Ok(ContextVector { codes })
    }

    pub fn get(&self, dim: ContextDim) -> Option<u8> {
        self.codes[dim.index()]
    }

    pub fn with(mut self, dim: ContextDim, code: Option<u8>) -> Result<Self, ModelError> {
        self.codes[dim.index()] = match code {
            Some(c) => dim.check(i64::from(c))?,
            None => None,
        };
        Ok(self)
    }

    pub fn label(&self, dim: ContextDim) -> Option<&'static str> {
        self.get(dim).and_then(|c| dim.label(c))
    }

    /// Codes as written to file, `-1` for missing.
    pub fn raw_codes(&self) -> [i64; 12] {
        self.codes.map(|c| c.map_or(MISSING_CODE, i64::from))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: UserId,
    pub age: Option<u32>,
    pub sex: Option<Sex>,
    pub occupation: Option<String>,
    pub city: Option<String>,
    pub country: Option<String>,
    pub zip: Option<String>,
}

impl UserProfile {
    pub fn bare(user_id: UserId) -> Self {
        UserProfile {
            user_id,
            ..Default::default()
        }
    }
}

/// Optional movie metadata. Only `genres` on [`Movie`] feeds the math.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MovieMeta {
    pub director: Option<String>,
    pub country: Option<String>,
    pub language: Option<String>,
    pub year: Option<i32>,
    pub release_date: Option<String>,
    pub video_release_date: Option<String>,
    pub url: Option<String>,
    pub actors: Vec<String>,
    pub budget: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Movie {
    pub item_id: ItemId,
    pub title: String,
    pub genres: BTreeSet<GenreId>,
    pub meta: MovieMeta,
}

impl Movie {
    pub fn new(
        item_id: ItemId,
        title: impl Into<String>,
        genres: impl IntoIterator<Item = GenreId>,
    ) -> Self {
        Movie {
            item_id,
            title: title.into(),
            genres: genres.into_iter().collect(),
            meta: MovieMeta::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user_id: UserId,
    pub item_id: ItemId,
    pub rating: Rating,
    pub context: Option<ContextVector>,
    /// Seconds since the epoch.
    pub timestamp: Option<i64>,
}

impl RatingRecord {
    pub fn new(user_id: UserId, item_id: ItemId, rating: Rating) -> Self {
        RatingRecord {
            user_id,
            item_id,
            rating,
            context: None,
            timestamp: None,
        }
    }

    pub fn with_timestamp(mut self, ts: i64) -> Self {
        self.timestamp = Some(ts);
        self
    }

    pub fn with_context(mut self, ctx: ContextVector) -> Self {
        self.context = Some(ctx);
        self
    }

    /// Identity used for duplicate detection; the rating value is not part of it.
    fn key(&self) -> (UserId, ItemId, Option<i64>, Option<ContextVector>) {
        (self.user_id, self.item_id, self.timestamp, self.context)
    }

    fn sort_key(&self) -> (UserId, ItemId, Option<i64>, Option<ContextVector>, Rating) {
        (
            self.user_id,
            self.item_id,
            self.timestamp,
            self.context,
            self.rating,
        )
    }
}

impl fmt::Display for RatingRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(user {}, item {}, rating {}",
            self.user_id, self.item_id, self.rating
        )?;
        if let Some(ts) = self.timestamp {
            write!(f, ", ts {ts}")?;
        }
        if let Some(ctx) = &self.context {
            write!(f, ", ctx {:?}", ctx.raw_codes())?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Comoda,
    Movielens,
    Synthetic,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::Comoda => "comoda",
            SourceTag::Movielens => "movielens",
            SourceTag::Synthetic => "synthetic",
        })
    }
}

/// Sparse vector of `(id, value)` pairs in ascending id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts by id. Repeated ids are averaged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
        for (id, v) in pairs {
            let slot = acc.entry(id).or_insert((0.0, 0));
            slot.0 += v;
            slot.1 += 1;
        }
        SparseVector {
            entries: acc
                .into_iter()
                .map(|(id, (sum, n))| (id, sum / f64::from(n)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, id: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.get(id).is_some()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64)
        }
    }

    /// Values at ids present in both vectors, in ascending id order.
    pub fn co_rated(&self, other: &SparseVector) -> Vec<(u32, f64, f64)> {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1, b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    pub fn to_map(&self) -> BTreeMap<u32, f64> {
        self.entries.iter().copied().collect()
    }
}

/// Immutable, indexed rating corpus.
///
/// Ratings are stored in a canonical order (user, item, timestamp, context,
/// rating) so construction is independent of input order. Users and movies
/// with no ratings stay in the catalogs and are reported as inactive.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    source: SourceTag,
    genre_catalog: Vec<String>,
    users: Vec<UserProfile>,
    movies: Vec<Movie>,
    ratings: Vec<RatingRecord>,
    user_pos: BTreeMap<UserId, usize>,
    movie_pos: BTreeMap<ItemId, usize>,
    by_user: Vec<Vec<usize>>,
    by_item: Vec<Vec<usize>>,
}

/// Builds a [`Dataset`], enforcing referential integrity and duplicate rules.
pub fn make_dataset(
    users: Vec<UserProfile>,
    movies: Vec<Movie>,
    ratings: Vec<RatingRecord>,
    genre_catalog: Vec<String>,
    source: SourceTag,
) -> Result<Dataset, ModelError> {
    Dataset::new(users, movies, ratings, genre_catalog, source)
}

impl Dataset {
    pub fn new(
        mut users: Vec<UserProfile>,
        mut movies: Vec<Movie>,
        mut ratings: Vec<RatingRecord>,
        genre_catalog: Vec<String>,
        source: SourceTag,
    ) -> Result<Self, ModelError> {
        users.sort_by_key(|u| u.user_id);
        movies.sort_by_key(|m| m.item_id);
        for pair in users.windows(2) {
            if pair[0].user_id == pair[1].user_id {
                return Err(ModelError::DuplicateUser(pair[0].user_id));
            }
        }
        for pair in movies.windows(2) {
            if pair[0].item_id == pair[1].item_id {
                return Err(ModelError::DuplicateMovie(pair[0].item_id));
            }
        }
        if let Some(u) = users.iter().find(|u| u.user_id == 0) {
            return Err(ModelError::InvalidId(i64::from(u.user_id)));
        }
        if let Some(m) = movies.iter().find(|m| m.item_id == 0) {
            return Err(ModelError::InvalidId(i64::from(m.item_id)));
        }
        for m in &movies {
            if let Some(&g) = m
                .genres
                .iter()
                .find(|&&g| usize::from(g) >= genre_catalog.len())
            {
                return Err(ModelError::UnknownGenre {
                    item: m.item_id,
                    genre: g,
                    catalog: genre_catalog.len(),
                });
            }
        }

        let user_pos: BTreeMap<UserId, usize> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.user_id, i))
            .collect();
        let movie_pos: BTreeMap<ItemId, usize> = movies
            .iter()
            .enumerate()
            .map(|(i, m)| (m.item_id, i))
            .collect();

        ratings.sort_by_key(|r| r.sort_key());
        let mut by_user = vec![Vec::new(); users.len()];
        let mut by_item = vec![Vec::new(); movies.len()];
        for (idx, r) in ratings.iter().enumerate() {
            let Some(&u) = user_pos.get(&r.user_id) else {
                return Err(ModelError::DanglingUser {
                    user: r.user_id,
                    record: r.to_string(),
                });
            };
            let Some(&m) = movie_pos.get(&r.item_id) else {
                return Err(ModelError::DanglingItem {
                    item: r.item_id,
                    record: r.to_string(),
                });
            };
            if idx > 0 && ratings[idx - 1].key() == r.key() {
                return Err(ModelError::DuplicateRating(r.to_string()));
            }
            by_user[u].push(idx);
            by_item[m].push(idx);
        }

        Ok(Dataset {
            source,
            genre_catalog,
            users,
            movies,
            ratings,
            user_pos,
            movie_pos,
            by_user,
            by_item,
        })
    }

    /// Same catalogs, ratings restricted to those where `keep` holds.
    pub fn retain_ratings(&self, mut keep: impl FnMut(&RatingRecord) -> bool) -> Dataset {
        let ratings: Vec<RatingRecord> = self.ratings.iter().filter(|r| keep(r)).copied().collect();
        self.with_ratings_unchecked(ratings)
    }

    /// Same catalogs with `ratings`, which must be a sub-multiset of this corpus.
    pub(crate) fn with_ratings_unchecked(&self, ratings: Vec<RatingRecord>) -> Dataset {
        Dataset::new(
            self.users.clone(),
            self.movies.clone(),
            ratings,
            self.genre_catalog.clone(),
            self.source,
        )
        .expect("subset of a valid dataset is valid")
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    pub fn genre_catalog(&self) -> &[String] {
        &self.genre_catalog
    }

    pub fn genre_name(&self, g: GenreId) -> Option<&str> {
        self.genre_catalog.get(usize::from(g)).map(String::as_str)
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn movies(&self) -> &[Movie] {
        &self.movies
    }

    /// All ratings in canonical order.
    pub fn ratings(&self) -> &[RatingRecord] {
        &self.ratings
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.users.len(), self.movies.len(), self.ratings.len())
    }

    pub fn user(&self, id: UserId) -> Option<&UserProfile> {
        self.user_pos.get(&id).map(|&i| &self.users[i])
    }

    pub fn movie(&self, id: ItemId) -> Option<&Movie> {
        self.movie_pos.get(&id).map(|&i| &self.movies[i])
    }

    pub fn has_user(&self, id: UserId) -> bool {
        self.user_pos.contains_key(&id)
    }

    pub fn ratings_of_user(&self, id: UserId) -> impl Iterator<Item = &RatingRecord> + '_ {
        let idx: &[usize] = self.user_pos.get(&id).map_or(&[], |&i| &self.by_user[i]);
        idx.iter().map(move |&k| &self.ratings[k])
    }

    pub fn ratings_of_item(&self, id: ItemId) -> impl Iterator<Item = &RatingRecord> + '_ {
        let idx: &[usize] = self.movie_pos.get(&id).map_or(&[], |&i| &self.by_item[i]);
        idx.iter().map(move |&k| &self.ratings[k])
    }

    pub fn is_user_active(&self, id: UserId) -> bool {
        self.user_pos
            .get(&id)
            .is_some_and(|&i| !self.by_user[i].is_empty())
    }

    pub fn is_item_active(&self, id: ItemId) -> bool {
        self.movie_pos
            .get(&id)
            .is_some_and(|&i| !self.by_item[i].is_empty())
    }

    pub fn active_users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.users
            .iter()
            .zip(&self.by_user)
            .filter(|(_, idx)| !idx.is_empty())
            .map(|(u, _)| u.user_id)
    }

    pub fn active_items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.movies
            .iter()
            .zip(&self.by_item)
            .filter(|(_, idx)| !idx.is_empty())
            .map(|(m, _)| m.item_id)
    }

    pub fn inactive_users(&self) -> Vec<UserId> {
        self.users
            .iter()
            .zip(&self.by_user)
            .filter(|(_, idx)| idx.is_empty())
            .map(|(u, _)| u.user_id)
            .collect()
    }

    pub fn inactive_items(&self) -> Vec<ItemId> {
        self.movies
            .iter()
            .zip(&self.by_item)
            .filter(|(_, idx)| idx.is_empty())
            .map(|(m, _)| m.item_id)
            .collect()
    }

    /// The user's ratings keyed by item, ascending. Repeat ratings of one item
    /// (allowed in CoMoDa) collapse to their mean.
    pub fn user_vector(&self, id: UserId) -> Result<BTreeMap<ItemId, f64>, ModelError> {
        self.user_sparse(id).map(|v| v.to_map())
    }

    pub fn user_sparse(&self, id: UserId) -> Result<SparseVector, ModelError> {
        if !self.has_user(id) {
            return Err(ModelError::UserNotFound(id));
        }
        Ok(SparseVector::from_pairs(
            self.ratings_of_user(id)
                .map(|r| (r.item_id, r.rating.as_f64())),
        ))
    }

    /// Ratings of one item keyed by user (repeats averaged).
    pub fn item_sparse(&self, id: ItemId) -> Result<SparseVector, ModelError> {
        if !self.movie_pos.contains_key(&id) {
            return Err(ModelError::ItemNotFound(id));
        }
        Ok(SparseVector::from_pairs(
            self.ratings_of_item(id)
                .map(|r| (r.user_id, r.rating.as_f64())),
        ))
    }

    pub fn global_mean(&self) -> Option<f64> {
        if self.ratings.is_empty() {
            None
        } else {
            Some(
                self.ratings.iter().map(|r| r.rating.as_f64()).sum::<f64>()
                    / self.ratings.len() as f64,
            )
        }
    }
}
