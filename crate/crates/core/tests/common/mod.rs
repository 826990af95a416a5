#![allow(dead_code)]

use ahprec::model::{make_dataset, Dataset, Movie, Rating, RatingRecord, SourceTag, UserProfile};
use proptest::prelude::*;

/// Dense rating matrix, `m[u][i]` for user `u + 1`, item `i + 1`.
pub type Dense = Vec<Vec<Option<u8>>>;

pub fn dense_dataset(m: &Dense) -> Dataset {
    let n_items = m.first().map_or(0, Vec::len);
    let users = (1..=m.len() as u32).map(UserProfile::bare).collect();
    let movies = (1..=n_items as u32)
        .map(|i| Movie::new(i, format!("item {i}"), [(i % 3) as u16]))
        .collect();
    let ratings = m
        .iter()
        .enumerate()
        .flat_map(|(u, row)| {
            row.iter().enumerate().filter_map(move |(i, r)| {
                r.map(|r| {
                    RatingRecord::new(
                        u as u32 + 1,
                        i as u32 + 1,
                        Rating::new(i64::from(r)).unwrap(),
                    )
                })
            })
        })
        .collect();
    make_dataset(
        users,
        movies,
        ratings,
        vec!["g0".into(), "g1".into(), "g2".into()],
        SourceTag::Synthetic,
    )
    .unwrap()
}

pub fn dense_matrix(max_users: usize, max_items: usize) -> impl Strategy<Value = Dense> {
    (2..=max_users, 2..=max_items).prop_flat_map(|(u, i)| {
        prop::collection::vec(
            prop::collection::vec(prop::option::weighted(0.65, 1u8..=5), i),
            u,
        )
    })
}

pub fn col(m: &Dense, i: usize) -> Vec<Option<u8>> {
    m.iter().map(|row| row[i]).collect()
}

pub fn mean_of(xs: &[Option<u8>]) -> Option<f64> {
    let vals: Vec<f64> = xs.iter().flatten().map(|&r| f64::from(r)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn co_rated(a: &[Option<u8>], b: &[Option<u8>]) -> Vec<(usize, f64, f64)> {
    a.iter()
        .zip(b)
        .enumerate()
        .filter_map(|(k, (x, y))| Some((k, f64::from((*x)?), f64::from((*y)?))))
        .collect()
}

fn guard(den: f64) -> bool {
    den > 0.0 && den.is_finite()
}

pub fn ref_pearson(a: &[Option<u8>], b: &[Option<u8>], min_overlap: usize) -> Option<f64> {
    let co = co_rated(a, b);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let n = co.len() as f64;
    let ma = co.iter().map(|c| c.1).sum::<f64>() / n;
    let mb = co.iter().map(|c| c.2).sum::<f64>() / n;
    let num: f64 = co.iter().map(|c| (c.1 - ma) * (c.2 - mb)).sum();
    let da: f64 = co.iter().map(|c| (c.1 - ma).powi(2)).sum();
    let db: f64 = co.iter().map(|c| (c.2 - mb).powi(2)).sum();
    (guard(da) && guard(db)).then(|| num / (da.sqrt() * db.sqrt()))
}

pub fn ref_cosine(a: &[Option<u8>], b: &[Option<u8>], min_overlap: usize) -> Option<f64> {
    let co = co_rated(a, b);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let num: f64 = co.iter().map(|c| c.1 * c.2).sum();
    let da: f64 = co.iter().map(|c| c.1 * c.1).sum();
    let db: f64 = co.iter().map(|c| c.2 * c.2).sum();
    Some(num / (da.sqrt() * db.sqrt()))
}

/// Average rank by counting: (# smaller) + (# equal + 1) / 2.
fn count_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let eq = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

pub fn ref_spearman(a: &[Option<u8>], b: &[Option<u8>], min_overlap: usize) -> Option<f64> {
    let co = co_rated(a, b);
    if co.is_empty() || co.len() < min_overlap {
        return None;
    }
    let ra = count_ranks(&co.iter().map(|c| c.1).collect::<Vec<_>>());
    let rb = count_ranks(&co.iter().map(|c| c.2).collect::<Vec<_>>());
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let num: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let da: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let db: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (guard(da) && guard(db)).then(|| num / (da.sqrt() * db.sqrt()))
}

/// Adjusted cosine between item columns `i` and `j`, centering on each
/// user's mean over their full row.
pub fn ref_adjusted_cosine(m: &Dense, i: usize, j: usize, min_overlap: usize) -> Option<f64> {
    let mut num = 0.0;
    let (mut di, mut dj) = (0.0, 0.0);
    let mut overlap = 0;
    for row in m {
        if let (Some(a), Some(b)) = (row[i], row[j]) {
            let mu = mean_of(row).unwrap();
            let (x, y) = (f64::from(a) - mu, f64::from(b) - mu);
            num += x * y;
            di += x * x;
            dj += y * y;
            overlap += 1;
        }
    }
    if overlap == 0 || overlap < min_overlap || !guard(di) || !guard(dj) {
        return None;
    }
    Some(num / (di.sqrt() * dj.sqrt()))
}

pub type UserMeasure = fn(&[Option<u8>], &[Option<u8>], usize) -> Option<f64>;

pub fn reference_measure(name: &str) -> UserMeasure {
    match name {
        "pearson" => ref_pearson,
        "cosine" => ref_cosine,
        "spearman" => ref_spearman,
        other => panic!("no reference for {other}"),
    }
}

fn global_mean(m: &Dense) -> Option<f64> {
    mean_of(&m.iter().flatten().copied().collect::<Vec<_>>())
}

fn clamp(x: f64) -> f64 {
    x.clamp(1.0, 5.0)
}

/// Keeps the best `k` of `(id, sim)` under descending sim, ascending id.
fn best_k(mut xs: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    xs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    xs.truncate(k);
    xs
}

/// User-based prediction for zero-based `(u, i)` computed straight from the
/// dense matrix. Returns `(value, used_fallback)`.
pub fn ref_user_prediction(
    m: &Dense,
    u: usize,
    i: usize,
    measure: UserMeasure,
    k: usize,
    min_overlap: usize,
    mean_centered: bool,
) -> (f64, bool) {
    let user_mean = mean_of(&m[u]);
    let item_mean = mean_of(&col(m, i));
    let scored: Vec<(usize, f64)> = (0..m.len())
        .filter(|&v| v != u && m[v][i].is_some())
        .filter_map(|v| measure(&m[u], &m[v], min_overlap).map(|s| (v, s.clamp(-1.0, 1.0))))
        .collect();
    let hood = best_k(scored, k);
    let den: f64 = hood.iter().map(|(_, s)| s.abs()).sum();
    let fallback = || user_mean.or(item_mean).or(global_mean(m)).unwrap_or(3.0);
    if hood.is_empty() || den < 1e-12 {
        return (clamp(fallback()), true);
    }
    let num: f64 = hood
        .iter()
        .map(|&(v, s)| {
            let r = f64::from(m[v][i].unwrap());
            if mean_centered {
                s * (r - mean_of(&m[v]).unwrap())
            } else {
                s * r
            }
        })
        .sum();
    if mean_centered {
        match user_mean {
            Some(mu) => (clamp(mu + num / den), false),
            None => (clamp(fallback()), true),
        }
    } else {
        (clamp(num / den), false)
    }
}

/// Item-based prediction from the dense matrix.
pub fn ref_item_prediction(
    m: &Dense,
    u: usize,
    i: usize,
    k: usize,
    min_overlap: usize,
) -> (f64, bool) {
    let user_mean = mean_of(&m[u]);
    let item_mean = mean_of(&col(m, i));
    let n_items = m[0].len();
    let scored: Vec<(usize, f64)> = (0..n_items)
        .filter(|&j| j != i && m[u][j].is_some())
        .filter_map(|j| ref_adjusted_cosine(m, i, j, min_overlap).map(|s| (j, s.clamp(-1.0, 1.0))))
        .collect();
    let hood = best_k(scored, k);
    let den: f64 = hood.iter().map(|(_, s)| s.abs()).sum();
    let fallback = || item_mean.or(user_mean).or(global_mean(m)).unwrap_or(3.0);
    match item_mean {
        Some(mi) if !hood.is_empty() && den >= 1e-12 => {
            let num: f64 = hood
                .iter()
                .map(|&(j, s)| s * (f64::from(m[u][j].unwrap()) - mean_of(&col(m, j)).unwrap()))
                .sum();
            (clamp(mi + num / den), false)
        }
        _ => (clamp(fallback()), true),
    }
}
