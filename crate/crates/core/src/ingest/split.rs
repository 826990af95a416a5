use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::IngestError;
use crate::model::{Dataset, RatingRecord, UserId};

pub const DEFAULT_SPLIT_SEED: u64 = 42;
const FOLDS: usize = 5;
const UK_TRAIN_FRACTION: f64 = 0.8;
const PER_USER_TEST: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitName {
    /// Fold `k` of five, 1-based.
    U(u8),
    Ua,
    Ub,
    Custom,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitName::U(k) => write!(f, "u{k}"),
            SplitName::Ua => f.write_str("ua"),
            SplitName::Ub => f.write_str("ub"),
            SplitName::Custom => f.write_str("custom"),
        }
    }
}

/// A train/test split recipe.
///
/// `u1`..`u5` cut a seeded permutation of all ratings into five contiguous
/// 20% blocks and use block `k` as the test set, so the five test sets are
/// disjoint. `ua` and `ub` hold out 10 ratings per user: slots 0..10 and
/// 10..20 of a seeded per-user permutation, which keeps them disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitSpec {
    pub name: SplitName,
    pub train_fraction: f64,
    pub per_user_test_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn fold(k: u8) -> Result<Self, IngestError> {
        if !(1..=FOLDS as u8).contains(&k) {
            return Err(IngestError::InvalidSplit(format!(
                "fold u{k} outside u1..u5"
            )));
        }
        Ok(SplitSpec {
            name: SplitName::U(k),
            train_fraction: UK_TRAIN_FRACTION,
            per_user_test_count: 0,
            seed: DEFAULT_SPLIT_SEED,
        })
    }

    pub fn ua() -> Self {
        SplitSpec {
            name: SplitName::Ua,
            train_fraction: 0.0,
            per_user_test_count: PER_USER_TEST,
            seed: DEFAULT_SPLIT_SEED,
        }
    }

    pub fn ub() -> Self {
        SplitSpec {
            name: SplitName::Ub,
            ..Self::ua()
        }
    }

    pub fn custom(train_fraction: f64, seed: u64) -> Result<Self, IngestError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(IngestError::InvalidSplit(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        Ok(SplitSpec {
            name: SplitName::Custom,
            train_fraction,
            per_user_test_count: 0,
            seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The five folds `u1`..`u5`.
    pub fn folds() -> Vec<Self> {
        (1..=FOLDS as u8)
            .map(|k| Self::fold(k).expect("valid fold"))
            .collect()
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            SplitName::Custom => write!(f, "custom:{}", self.train_fraction),
            name => write!(f, "{name}"),
        }
    }
}

/// `u1`..`u5`, `ua`, `ub` or `custom:<train fraction>`, with the default seed.
impl FromStr for SplitSpec {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "ua" => Ok(Self::ua()),
            "ub" => Ok(Self::ub()),
            _ => {
                if let Some(f) = s.strip_prefix("custom:") {
                    let f: f64 = f.parse().map_err(|_| {
                        IngestError::InvalidSplit(format!("bad train fraction in `{s}`"))
                    })?;
                    return Self::custom(f, DEFAULT_SPLIT_SEED);
                }
                match s.strip_prefix('u').and_then(|k| k.parse::<u8>().ok()) {
                    Some(k) => Self::fold(k),
                    None => Err(IngestError::InvalidSplit(format!(
                        "unknown split `{s}` (expected u1..u5, ua, ub or custom:<fraction>)"
                    ))),
                }
            }
        }
    }
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

fn user_seed(seed: u64, user: UserId) -> u64 {
    seed ^ u64::from(user).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Partitions `d`'s ratings into `(train, test)`. Both keep the full user and
/// item catalogs.
pub fn generate_splits(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), IngestError> {
    let ratings = d.ratings();
    let n = ratings.len();
    let mut is_test = vec![false; n];
    match spec.name {
        SplitName::U(k) => {
            let k = usize::from(k);
            if !(1..=FOLDS).contains(&k) {
                return Err(IngestError::InvalidSplit(format!(
                    "fold u{k} outside u1..u5"
                )));
            }
            let perm = permutation(n, spec.seed);
            for &i in &perm[(k - 1) * n / FOLDS..k * n / FOLDS] {
                is_test[i] = true;
            }
        }
        SplitName::Custom => {
            if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
                return Err(IngestError::InvalidSplit(format!(
                    "train fraction {} outside (0, 1)",
                    spec.train_fraction
                )));
            }
            // floor, with a small guard so 0.2 * 100000 is not 19999
            let count = ((1.0 - spec.train_fraction) * n as f64 + 1e-6).floor() as usize;
            for &i in &permutation(n, spec.seed)[..count.min(n)] {
                is_test[i] = true;
            }
        }
        SplitName::Ua | SplitName::Ub => {
            let per = spec.per_user_test_count;
            let offset = if spec.name == SplitName::Ua { 0 } else { per };
            let needed = offset + per;
            let short: Vec<UserId> = d
                .active_users()
                .filter(|&u| d.ratings_of_user(u).count() < needed)
                .collect();
            if !short.is_empty() {
                return Err(IngestError::TooFewRatings {
                    needed,
                    count: short.len(),
                    users: short,
                });
            }
            // ratings are stored grouped by user, so each user's run is contiguous
            let mut start = 0;
            while start < n {
                let user = ratings[start].user_id;
                let end = start
                    + ratings[start..]
                        .iter()
                        .take_while(|r| r.user_id == user)
                        .count();
                let perm = permutation(end - start, user_seed(spec.seed, user));
                for &i in &perm[offset..offset + per] {
                    is_test[start + i] = true;
                }
                start = end;
            }
        }
    }
    let (mut train, mut test): (Vec<RatingRecord>, Vec<RatingRecord>) = (Vec::new(), Vec::new());
    for (r, &t) in ratings.iter().zip(&is_test) {
        if t {
            test.push(*r);
        } else {
            train.push(*r);
        }
    }
    Ok((
        d.with_ratings_unchecked(train),
        d.with_ratings_unchecked(test),
    ))
}
