//! Seeded generator for CoMoDa-shaped corpora.
//!
//! Users have latent genre tastes and a habitual viewing context, so a
//! context query still leaves groups of users who share items. Item
//! popularity is heavily skewed for the same reason.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::comoda::COMODA_GENRES;
use super::IngestError;
use crate::model::{
    make_dataset, ContextDim, ContextVector, Dataset, GenreId, ItemId, Movie, MovieMeta, Rating,
    RatingRecord, Sex, SourceTag, UserId, UserProfile,
};

/// Genres from most to least common in generated items.
const POPULARITY: [&str; 22] = [
    "Drama",
    "Comedy",
    "Romance",
    "Action",
    "Thriller",
    "Adventure",
    "Crime",
    "Sci-Fi",
    "Fantasy",
    "Family",
    "Mystery",
    "Animation",
    "Biography",
    "Horror",
    "War",
    "History",
    "Music",
    "Sport",
    "Musical",
    "Documentary",
    "Western",
    "Film-Noir",
];

const CITIES: [&str; 6] = [
    "Ljubljana",
    "Maribor",
    "Celje",
    "Kranj",
    "Koper",
    "Novo mesto",
];
const COUNTRIES: [&str; 5] = ["USA", "UK", "France", "Slovenia", "Germany"];
const LANGUAGES: [&str; 4] = ["English", "English", "French", "German"];

/// Habitual contexts: (time, daytype, location, social, mood) codes.
const HABITS: [[i64; 5]; 3] = [[3, 2, 1, 2, 1], [3, 1, 1, 1, 2], [2, 2, 3, 3, 1]];
const HABIT_SHARE: [f64; 3] = [0.5, 0.3, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// Same counts as the public LDOS-CoMoDa release.
    fn default() -> Self {
        SyntheticConfig {
            users: 95,
            items: 961,
            ratings: 1665,
            seed: 2012,
        }
    }
}

struct User {
    taste: Vec<f64>,
    bias: f64,
    habit: usize,
}

/// The corpus behind the bundled `comoda_sample.tsv` fixture.
pub fn comoda_sample() -> Dataset {
    generate(&SyntheticConfig::default()).expect("default synthetic config is valid")
}

/// Generates a corpus with exactly the configured counts, every user and
/// every item carrying at least one rating.
pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset, IngestError> {
    if cfg.users == 0 || cfg.items == 0 || cfg.ratings < cfg.items.max(cfg.users) {
        return Err(IngestError::Config(format!(
            "synthetic corpus needs users, items > 0 and ratings >= max(users, items); got {cfg:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let genre_of = |name: &str| {
        COMODA_GENRES
            .iter()
            .position(|g| *g == name)
            .expect("known genre") as GenreId
    };
    let genre_pick =
        WeightedIndex::new((0..POPULARITY.len()).map(|r| 1.0 / (r as f64 + 1.0))).unwrap();

    let mut movies = Vec::with_capacity(cfg.items);
    let mut quality = Vec::with_capacity(cfg.items);
    for item in 1..=cfg.items as ItemId {
        let count = match rng.gen_range(0..20) {
            0..=9 => 1,
            10..=16 => 2,
            _ => 3,
        };
        let mut genres = BTreeSet::new();
        while genres.len() < count {
            genres.insert(genre_of(POPULARITY[genre_pick.sample(&mut rng)]));
        }
        let meta = MovieMeta {
            director: Some(format!("Director {}", rng.gen_range(1..=400))),
            country: Some(COUNTRIES.choose(&mut rng).unwrap().to_string()),
            language: Some(LANGUAGES.choose(&mut rng).unwrap().to_string()),
            year: Some(2012 - (rng.gen::<f64>().powi(2) * 60.0) as i32),
            actors: (0..3)
                .map(|_| format!("Actor {}", rng.gen_range(1..=1500)))
                .collect(),
            ..Default::default()
        };
        movies.push(Movie {
            item_id: item,
            title: format!("item {item}"),
            genres,
            meta,
        });
        quality.push(rng.gen_range(-0.8..0.8));
    }

    let habit_pick = WeightedIndex::new(HABIT_SHARE).unwrap();
    let mut profiles = Vec::with_capacity(cfg.users);
    let mut users = Vec::with_capacity(cfg.users);
    for user in 1..=cfg.users as UserId {
        profiles.push(UserProfile {
            user_id: user,
            age: Some(rng.gen_range(18..=65)),
            sex: Some(if rng.gen_bool(0.6) {
                Sex::Male
            } else {
                Sex::Female
            }),
            city: Some(CITIES.choose(&mut rng).unwrap().to_string()),
            country: Some("Slovenia".into()),
            ..Default::default()
        });
        users.push(User {
            taste: (0..COMODA_GENRES.len())
                .map(|_| rng.gen_range(-1.2..1.2))
                .collect(),
            bias: rng.gen_range(-0.6..0.6),
            habit: habit_pick.sample(&mut rng),
        });
    }

    let activity = skewed_weights(cfg.users, 0.8, &mut rng);
    let popularity = skewed_weights(cfg.items, 1.1, &mut rng);
    let user_pick = WeightedIndex::new(&activity).unwrap();
    let item_pick = WeightedIndex::new(&popularity).unwrap();

    let mut pairs: Vec<(usize, usize)> = (0..cfg.items)
        .map(|i| (user_pick.sample(&mut rng), i))
        .collect();
    let mut rated: BTreeMap<usize, usize> = BTreeMap::new();
    for &(u, _) in &pairs {
        *rated.entry(u).or_default() += 1;
    }
    for u in 0..cfg.users {
        if !rated.contains_key(&u) {
            pairs.push((u, item_pick.sample(&mut rng)));
        }
    }
    let mut seen: HashSet<(usize, usize)> = pairs.iter().copied().collect();
    while pairs.len() < cfg.ratings {
        let pair = (user_pick.sample(&mut rng), item_pick.sample(&mut rng));
        // occasional re-ratings, as in the real corpus
        if seen.insert(pair) || rng.gen_bool(0.1) {
            pairs.push(pair);
        }
    }

    let mut ratings = Vec::with_capacity(pairs.len());
    let mut keys = HashSet::new();
    let mut first = HashSet::new();
    for (u, i) in pairs {
        let interaction = if first.insert((u, i)) { 1 } else { 2 };
        let ctx = loop {
            let ctx = context(users[u].habit, interaction, &mut rng);
            if keys.insert((u, i, ctx)) {
                break ctx;
            }
        };
        let user = &users[u];
        let movie = &movies[i];
        let taste = movie
            .genres
            .iter()
            .map(|&g| user.taste[usize::from(g)])
            .sum::<f64>()
            / movie.genres.len() as f64;
        let mood = match ctx.get(ContextDim::Mood) {
            Some(1) => 0.3,
            Some(3) => -0.3,
            _ => 0.0,
        };
        let score = 3.2 + user.bias + taste + quality[i] + mood + rng.gen_range(-0.7..0.7);
        let value = score.round().clamp(1.0, 5.0) as i64;
        ratings.push(
            RatingRecord::new(
                u as UserId + 1,
                movie.item_id,
                Rating::new(value).expect("clamped"),
            )
            .with_context(ctx),
        );
    }

    let catalog = COMODA_GENRES.iter().map(|s| s.to_string()).collect();
    Ok(make_dataset(
        profiles,
        movies,
        ratings,
        catalog,
        SourceTag::Comoda,
    )?)
}

/// Zipf-like weights over a random rank order.
fn skewed_weights(n: usize, exponent: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    rank.into_iter()
        .map(|r| 1.0 / (r as f64 + 1.0).powf(exponent))
        .collect()
}

fn context(habit: usize, interaction: i64, rng: &mut ChaCha8Rng) -> ContextVector {
    let mut codes = [0i64; 12];
    let mut draw = |dim: ContextDim| rng.gen_range(1..=i64::from(dim.max_code()));
    for dim in ContextDim::ALL {
        codes[dim.index()] = draw(dim);
    }
    let mut rng_bool = |p: f64| rng.gen_bool(p);
    if rng_bool(0.75) {
        let h = HABITS[habit];
        for (dim, code) in [
            ContextDim::Time,
            ContextDim::Daytype,
            ContextDim::Location,
            ContextDim::Social,
            ContextDim::Mood,
        ]
        .into_iter()
        .zip(h)
        {
            codes[dim.index()] = code;
        }
    }
    codes[ContextDim::Physical.index()] = if rng_bool(0.9) { 1 } else { 2 };
    codes[ContextDim::Interaction.index()] = interaction;
    for dim in [
        ContextDim::Weather,
        ContextDim::EndEmo,
        ContextDim::DominantEmo,
        ContextDim::Physical,
    ] {
        if rng_bool(0.04) {
            codes[dim.index()] = -1;
        }
    }
    ContextVector::from_codes(codes).expect("codes drawn within range")
}
