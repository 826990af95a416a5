mod common;

use std::collections::BTreeSet;

use ahprec::cf::StrategyRegistry;
use ahprec::contextfilter::ContextQuery;
use ahprec::eval::{cross_validate, evaluate_topn, fmeasure, EvalSettings};
use ahprec::ingest::{generate_splits, SplitSpec};
use ahprec::model::{make_dataset, Dataset, Movie, Rating, RatingRecord, SourceTag, UserProfile};
use ahprec::pipeline::{recommend, EngineConfig};
use common::{dense_dataset, dense_matrix, Dense};
use proptest::prelude::*;

fn corpus(ratings: &[(u32, u32, i64)]) -> Dataset {
    make_dataset(
        (1..=3).map(UserProfile::bare).collect(),
        (1..=7)
            .map(|i| Movie::new(i, format!("m{i}"), [0]))
            .collect(),
        ratings
            .iter()
            .map(|&(u, i, r)| RatingRecord::new(u, i, Rating::new(r).unwrap()))
            .collect(),
        vec!["g".into()],
        SourceTag::Synthetic,
    )
    .unwrap()
}

#[test]
fn three_user_fixture_matches_hand_count() {
    // every pair of users shares items 1 and 2; n exceeds every candidate set
    let train = corpus(&[
        (1, 1, 5),
        (1, 2, 4),
        (1, 3, 2),
        (2, 1, 4),
        (2, 2, 5),
        (2, 4, 5),
        (2, 5, 1),
        (3, 1, 3),
        (3, 2, 3),
        (3, 3, 4),
        (3, 6, 5),
    ]);
    // item 7 never appears in train, so user 1 cannot retrieve it
    let test = corpus(&[
        (1, 4, 5),
        (1, 6, 3),
        (1, 7, 4),
        (2, 3, 2),
        (3, 4, 4),
        (3, 5, 5),
    ]);
    let r = evaluate_topn(
        &train,
        &test,
        &EngineConfig::default(),
        &EvalSettings::default(),
        &StrategyRegistry::with_defaults(),
    )
    .unwrap();
    // user 1: retrieved {4,5,6}, relevant {4,7}; user 2: {3,6} vs {}; user 3: {4,5} vs {4,5}
    assert_eq!((r.n_retrieved, r.n_relevant, r.n_hit), (7, 4, 3));
    let per: Vec<_> = r
        .per_user
        .iter()
        .map(|u| (u.user_id, u.n_retrieved, u.n_relevant, u.n_hit))
        .collect();
    assert_eq!(per, vec![(1, 3, 2, 1), (2, 2, 0, 0), (3, 2, 2, 2)]);
    assert!((r.micro.precision - 3.0 / 7.0).abs() < 1e-12);
    assert!((r.micro.recall - 0.75).abs() < 1e-12);
    assert!((r.macro_avg.precision - (1.0 / 3.0 + 1.0) / 3.0).abs() < 1e-12);
    assert!((r.macro_avg.recall - 0.5).abs() < 1e-12);
    assert_eq!(r.per_user[2].metrics.precision, 1.0);
}

fn split_matrix() -> impl Strategy<Value = (Dense, Vec<Vec<bool>>)> {
    dense_matrix(7, 8).prop_flat_map(|m| {
        let (u, i) = (m.len(), m[0].len());
        (
            Just(m),
            prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), i), u),
        )
    })
}

fn halves(m: &Dense, mask: &[Vec<bool>]) -> (Dataset, Dataset) {
    let pick = |want: bool| -> Dense {
        m.iter()
            .zip(mask)
            .map(|(row, bits)| {
                row.iter()
                    .zip(bits)
                    .map(|(r, &b)| if b == want { *r } else { None })
                    .collect()
            })
            .collect()
    };
    (dense_dataset(&pick(false)), dense_dataset(&pick(true)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn counters_match_exhaustive_intersection(
        (m, mask) in split_matrix(),
        n in 1usize..6,
        threshold in 1u8..=5,
        alpha in prop::sample::select(vec![0.0, 0.4, 1.0]),
    ) {
        let (train, test) = halves(&m, &mask);
        prop_assume!(!test.ratings().is_empty());
        let reg = StrategyRegistry::with_defaults();
        let config = EngineConfig { n, alpha, ..Default::default() };
        let settings = EvalSettings { threshold, ..Default::default() };
        let r = evaluate_topn(&train, &test, &config, &settings, &reg).unwrap();

        let (mut n_ret, mut n_rel, mut n_hit, mut evaluated, mut skipped) = (0, 0, 0, 0, 0);
        for user in test.active_users() {
            let Ok(list) = recommend(&train, user, &ContextQuery::empty(), &config, &reg) else {
                skipped += 1;
                continue;
            };
            let relevant: BTreeSet<u32> = test
                .ratings_of_user(user)
                .filter(|x| x.rating.get() >= threshold)
                .map(|x| x.item_id)
                .collect();
            let retrieved: BTreeSet<u32> = list.items().into_iter().collect();
            evaluated += 1;
            n_ret += retrieved.len();
            n_rel += relevant.len();
            n_hit += retrieved.intersection(&relevant).count();
        }
        prop_assert_eq!((r.n_retrieved, r.n_relevant, r.n_hit), (n_ret, n_rel, n_hit));
        prop_assert_eq!(r.users_evaluated, evaluated);
        prop_assert_eq!(r.skipped_not_in_train + r.skipped_cold_start, skipped);
        prop_assert!(r.n_retrieved <= n * r.users_evaluated);
    }

    #[test]
    fn report_invariants((m, mask) in split_matrix(), n in 1usize..6) {
        let (train, test) = halves(&m, &mask);
        prop_assume!(!test.ratings().is_empty());
        let config = EngineConfig { n, ..Default::default() };
        let r = evaluate_topn(&train, &test, &config, &EvalSettings::default(), &StrategyRegistry::with_defaults())
            .unwrap();
        let all = r.per_user.iter().map(|u| (u.n_retrieved, u.n_relevant, u.n_hit, u.metrics))
            .chain(std::iter::once((r.n_retrieved, r.n_relevant, r.n_hit, r.micro)));
        for (ret, rel, hit, mm) in all {
            prop_assert!(hit <= ret.min(rel));
            for x in [mm.precision, mm.recall, mm.fmeasure] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            prop_assert!(mm.fmeasure <= mm.precision.max(mm.recall) + 1e-15);
            prop_assert_eq!(mm.fmeasure == 0.0, mm.precision * mm.recall == 0.0);
        }
    }

    #[test]
    fn fmeasure_bounds(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = fmeasure(p, r).unwrap();
        prop_assert!(f >= 0.0 && f <= p.max(r) + 1e-15);
        prop_assert!(f >= p.min(r) - 1e-15 || p * r == 0.0);
        prop_assert_eq!(f == 0.0, p * r == 0.0);
        prop_assert!((fmeasure(r, p).unwrap() - f).abs() < 1e-15);
    }
}

#[test]
fn single_split_summary_and_determinism() {
    let mut m: Dense = Vec::new();
    for u in 0..12u32 {
        m.push(
            (0..10u32)
                .map(|i| ((u * 7 + i * 3) % 5 != 0).then_some(((u + i) % 5 + 1) as u8))
                .collect(),
        );
    }
    let d = dense_dataset(&m);
    let reg = StrategyRegistry::with_defaults();
    let cfg = EngineConfig::default();
    let specs = [SplitSpec::custom(0.7, 9).unwrap()];
    let a = cross_validate(&d, &specs, &cfg, &EvalSettings::default(), &reg);
    let b = cross_validate(&d, &specs, &cfg, &EvalSettings::default(), &reg);
    let ra = a.reports();
    assert_eq!(ra.len(), 1);
    assert_eq!(a.summary.mean, ra[0].micro);
    assert_eq!(a.summary.stddev.fmeasure, 0.0);
    assert_eq!(ra[0].to_json_line(), b.reports()[0].to_json_line());
    assert_eq!(ra[0].user_lines(), b.reports()[0].user_lines());
    assert_eq!(ra[0].seed, Some(9));

    let (train, test) = generate_splits(&d, &specs[0]).unwrap();
    let direct = evaluate_topn(&train, &test, &cfg, &EvalSettings::default(), &reg).unwrap();
    assert_eq!(
        (direct.n_retrieved, direct.n_hit),
        (ra[0].n_retrieved, ra[0].n_hit)
    );
}

#[test]
fn failing_split_keeps_its_error() {
    let d = dense_dataset(&vec![vec![Some(3); 4]; 3]);
    let cv = cross_validate(
        &d,
        &[SplitSpec::ua(), SplitSpec::custom(0.5, 1).unwrap()],
        &EngineConfig::default(),
        &EvalSettings::default(),
        &StrategyRegistry::with_defaults(),
    );
    assert!(cv.outcomes[0].result.is_err());
    assert_eq!(cv.outcomes[0].split, "ua");
    assert!(cv.outcomes[1].result.is_ok());
    assert_eq!((cv.summary.splits, cv.summary.failed), (1, 1));
}
