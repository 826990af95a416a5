mod common;

use ahprec::cf::StrategyRegistry;
use ahprec::contextfilter::{prefilter, ContextQuery};
use ahprec::model::{make_dataset, ContextVector, Dataset, ItemId, SourceTag};
use ahprec::pipeline::{
    fuse, rank_order, recommend, EngineConfig, GenreWeights, PipelineError, Prepared,
    RecommendationList,
};
use common::{dense_dataset, dense_matrix, ref_user_prediction, reference_measure, Dense};
use proptest::prelude::*;

const WEIGHTS: &str = "g0\t0.5\ng1\t0.3\ng2\t0.2\n";

fn table_weights(d: &Dataset) -> GenreWeights {
    GenreWeights::parse_table(d.genre_catalog(), WEIGHTS, "test").unwrap()
}

fn config(alpha: f64, n: usize) -> EngineConfig {
    EngineConfig {
        alpha,
        n,
        ..Default::default()
    }
}

fn run(
    d: &Dataset,
    user: u32,
    q: &ContextQuery,
    cfg: &EngineConfig,
) -> Result<RecommendationList, PipelineError> {
    let p = Prepared::new(d, q, cfg, &StrategyRegistry::with_defaults())?;
    let weights = table_weights(&p.data);
    let p = p.with_weights(weights);
    let list = p.fit().recommend(user);
    list
}

/// Whether user `u` shares `min_overlap` rated items with anyone.
fn ref_support(m: &Dense, u: usize, min_overlap: usize) -> bool {
    (0..m.len()).any(|v| {
        v != u
            && (0..m[u].len())
                .filter(|&i| m[u][i].is_some() && m[v][i].is_some())
                .count()
                >= min_overlap
    })
}

/// Direct evaluation of the whole ranking for dense matrix `m`: every
/// unrated item that somebody rated, scored and sorted exhaustively.
fn reference_list(m: &Dense, u: usize, alpha: f64, n: usize) -> Option<Vec<(ItemId, f64)>> {
    let cfg = EngineConfig::default();
    if !ref_support(m, u, cfg.cf.min_overlap) {
        return None;
    }
    let genre_weight = [0.5, 0.3, 0.2];
    let mut scored: Vec<(ItemId, f64)> = (0..m[0].len())
        .filter(|&i| m[u][i].is_none() && m.iter().any(|row| row[i].is_some()))
        .map(|i| {
            let (pred, _) = ref_user_prediction(
                m,
                u,
                i,
                reference_measure("pearson"),
                cfg.cf.k,
                cfg.cf.min_overlap,
                true,
            );
            // each item carries the single genre (id mod 3)
            let genre = genre_weight[(i + 1) % 3] / 0.5;
            (
                (i + 1) as ItemId,
                alpha * (pred - 1.0) / 4.0 + (1.0 - alpha) * genre,
            )
        })
        .collect();
    // selection by repeated maximum rather than a sort
    let mut out = Vec::new();
    while out.len() < n && !scored.is_empty() {
        let best = (0..scored.len())
            .reduce(|a, b| {
                let (x, y) = (scored[a], scored[b]);
                if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
                    b
                } else {
                    a
                }
            })
            .unwrap();
        out.push(scored.remove(best));
    }
    Some(out)
}

fn five_user_fixture() -> Dense {
    vec![
        vec![Some(5), Some(3), None, Some(4), None, None, Some(1)],
        vec![Some(4), None, Some(4), Some(5), Some(2), None, Some(2)],
        vec![Some(1), Some(5), Some(2), None, Some(4), Some(3), None],
        vec![None, Some(2), Some(5), Some(3), Some(1), Some(5), Some(2)],
        vec![Some(5), Some(4), None, Some(4), Some(3), Some(2), Some(1)],
    ]
}

#[test]
fn five_user_fixture_matches_exhaustive_fusion() {
    let m = five_user_fixture();
    let d = dense_dataset(&m);
    for u in 0..m.len() {
        let got = run(&d, u as u32 + 1, &ContextQuery::empty(), &config(0.7, 3)).unwrap();
        let want = reference_list(&m, u, 0.7, 3).unwrap();
        assert_eq!(
            got.items(),
            want.iter().map(|x| x.0).collect::<Vec<_>>(),
            "user {}",
            u + 1
        );
        for (e, (_, f)) in got.entries.iter().zip(&want) {
            assert!((e.fused - f).abs() < 1e-9);
        }
    }
}

fn with_time_context(d: &Dataset, times: &[u8]) -> Dataset {
    let ratings = d
        .ratings()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut c = [-1i64; 12];
            c[0] = i64::from(times[k % times.len()]);
            r.with_context(ContextVector::from_codes(c).unwrap())
        })
        .collect();
    make_dataset(
        d.users().to_vec(),
        d.movies().to_vec(),
        ratings,
        d.genre_catalog().to_vec(),
        SourceTag::Comoda,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_reference_pipeline(m in dense_matrix(8, 8), u in 0usize..8, alpha in 0.0f64..=1.0, n in 1usize..6) {
        let u = u % m.len();
        let d = dense_dataset(&m);
        let got = run(&d, u as u32 + 1, &ContextQuery::empty(), &config(alpha, n));
        match reference_list(&m, u, alpha, n) {
            None => {
                let cold = matches!(got, Err(PipelineError::ColdStart { context: None, .. }));
                prop_assert!(cold);
            }
            Some(want) => {
                let got = got.unwrap();
                prop_assert_eq!(got.items(), want.iter().map(|x| x.0).collect::<Vec<_>>());
                for (e, (_, f)) in got.entries.iter().zip(&want) {
                    prop_assert!((e.fused - f).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fused_scores_bounded_and_degenerate_at_extremes(m in dense_matrix(8, 8), u in 0usize..8) {
        let u = u as u32 % m.len() as u32 + 1;
        let d = dense_dataset(&m);
        let Ok(pure_cf) = run(&d, u, &ContextQuery::empty(), &config(1.0, 100)) else { return Ok(()) };
        let pure_genre = run(&d, u, &ContextQuery::empty(), &config(0.0, 100)).unwrap();
        let mixed = run(&d, u, &ContextQuery::empty(), &config(0.5, 100)).unwrap();
        for e in pure_cf.entries.iter().chain(&pure_genre.entries).chain(&mixed.entries) {
            prop_assert!((0.0..=1.0).contains(&e.fused));
        }
        let mut by_cf: Vec<_> = mixed.entries.iter().map(|e| (e.cf, e.item_id)).collect();
        by_cf.sort_by(|a, b| rank_order(*a, *b));
        prop_assert_eq!(pure_cf.items(), by_cf.iter().map(|x| x.1).collect::<Vec<_>>());
        let mut by_genre: Vec<_> = mixed.entries.iter().map(|e| (e.genre, e.item_id)).collect();
        by_genre.sort_by(|a, b| rank_order(*a, *b));
        prop_assert_eq!(pure_genre.items(), by_genre.iter().map(|x| x.1).collect::<Vec<_>>());
    }

    #[test]
    fn raising_a_prediction_never_lowers_its_rank(
        preds in prop::collection::vec((1.0f64..=5.0, 0.0f64..=1.0), 1..20),
        pick in any::<prop::sample::Index>(),
        bump in 0.0f64..4.0,
        alpha in 0.0f64..=1.0,
    ) {
        let rank_of = |preds: &[(f64, f64)], target: usize| {
            let mut v: Vec<(f64, ItemId)> =
                preds.iter().enumerate().map(|(i, &(p, g))| (fuse(alpha, p, g), i as ItemId)).collect();
            v.sort_by(|a, b| rank_order(*a, *b));
            v.iter().position(|x| x.1 as usize == target).unwrap()
        };
        let t = pick.index(preds.len());
        let before = rank_of(&preds, t);
        let mut raised = preds.clone();
        raised[t].0 = (raised[t].0 + bump).min(5.0);
        prop_assert!(rank_of(&raised, t) <= before);
    }

    #[test]
    fn recommending_in_context_is_prefilter_then_context_free(
        m in dense_matrix(8, 8),
        times in prop::collection::vec(1u8..=4, 1..4),
        u in 0usize..8,
        t in 1u8..=4,
    ) {
        let u = u as u32 % m.len() as u32 + 1;
        let d = with_time_context(&dense_dataset(&m), &times);
        let q = ContextQuery::parse(&format!("time={t}")).unwrap();
        let reg = StrategyRegistry::with_defaults();
        let cfg = EngineConfig::default();
        let direct = recommend(&d, u, &q, &cfg, &reg);
        let staged = recommend(&prefilter(&d, &q), u, &ContextQuery::empty(), &cfg, &reg);
        match (direct, staged) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.entries, b.entries),
            (Err(PipelineError::ColdStart { context, .. }), Err(PipelineError::ColdStart { context: None, .. })) => {
                prop_assert_eq!(context, Some(q.to_string()));
            }
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn deterministic(m in dense_matrix(8, 8), u in 0usize..8) {
        let u = u as u32 % m.len() as u32 + 1;
        let d = dense_dataset(&m);
        let reg = StrategyRegistry::with_defaults();
        let a = recommend(&d, u, &ContextQuery::empty(), &EngineConfig::default(), &reg);
        let b = recommend(&d, u, &ContextQuery::empty(), &EngineConfig::default(), &reg);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn bundled_weight_tables_cover_their_catalogs() {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let comoda = ahprec::ingest::synthetic::comoda_sample();
    let w = GenreWeights::load_table(
        comoda.genre_catalog(),
        &data.join("comoda_genre_weights.tsv"),
    )
    .unwrap();
    assert!(w.iter().all(|(_, x)| x > 0.0));
    assert!(w.raw_sum.unwrap() > 1.0);
    assert_eq!(w.ranked()[0].0, "Romance");
    let romance_comedy = ahprec::model::Movie::new(1, "x", [0, 2]);
    let s = ahprec::pipeline::genre_score(&romance_comedy, &w, Default::default());
    assert!((s - 0.7736).abs() < 5e-4);

    let movielens: Vec<String> = [
        "unknown",
        "Action",
        "Adventure",
        "Animation",
        "Children's",
        "Comedy",
        "Crime",
        "Documentary",
        "Drama",
        "Fantasy",
        "Film-Noir",
        "Horror",
        "Musical",
        "Mystery",
        "Romance",
        "Sci-Fi",
        "Thriller",
        "War",
        "Western",
    ]
    .map(String::from)
    .to_vec();
    let w =
        GenreWeights::load_table(&movielens, &data.join("movielens_genre_weights.tsv")).unwrap();
    assert!(w.iter().all(|(_, x)| x > 0.0));
    assert_eq!(w.ranked()[0].0, "Thriller");
}
