//! Top-N evaluation with precision, recall and F-measure, and
//! cross-validation over several splits.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cf::StrategyRegistry;
use crate::contextfilter::{prefilter, ContextQuery, MatchPolicy};
use crate::ingest::{generate_splits, IngestError, SplitSpec};
use crate::model::{Dataset, ItemId, UserId};
use crate::pipeline::{EngineConfig, PipelineError, Prepared};

/// Schema tag of a report line.
pub const REPORT_SCHEMA: &str = "ahprec.evalreport/1";
/// Schema tag of a per-user line.
pub const USER_SCHEMA: &str = "ahprec.evaluser/1";
/// Schema tag of a cross-validation summary line.
pub const SUMMARY_SCHEMA: &str = "ahprec.evalsummary/1";

pub const DEFAULT_THRESHOLD: u8 = 4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("test set is empty")]
    EmptyTest,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// `hit / retrieved`, 0 when nothing was retrieved.
pub fn precision(n_hit: usize, n_retrieved: usize) -> f64 {
    ratio(n_hit, n_retrieved)
}

/// `hit / relevant`, 0 when nothing was relevant.
pub fn recall(n_hit: usize, n_relevant: usize) -> f64 {
    ratio(n_hit, n_relevant)
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn fmeasure(p: f64, r: f64) -> Result<f64, EvalError> {
    for (name, value) in [("precision", p), ("recall", r)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(EvalError::OutOfRange { name, value });
        }
    }
    Ok(if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
}

impl Metrics {
    pub fn from_counts(n_retrieved: usize, n_relevant: usize, n_hit: usize) -> Self {
        let p = precision(n_hit, n_retrieved);
        let r = recall(n_hit, n_relevant);
        Metrics {
            precision: p,
            recall: r,
            fmeasure: fmeasure(p, r).expect("ratios of counts lie in [0, 1]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserEval {
    pub user_id: UserId,
    pub n_retrieved: usize,
    pub n_relevant: usize,
    pub n_hit: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Aggregate counters (micro-average, the headline) and the mean of the
/// per-user metrics (macro-average), with the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema: &'static str,
    pub split: String,
    pub context: ContextQuery,
    pub policy: MatchPolicy,
    pub threshold: u8,
    pub seed: Option<u64>,
    pub config: EngineConfig,
    pub users_evaluated: usize,
    pub skipped_not_in_train: usize,
    pub skipped_cold_start: usize,
    pub n_retrieved: usize,
    pub n_relevant: usize,
    pub n_hit: usize,
    #[serde(flatten)]
    pub micro: Metrics,
    #[serde(rename = "macro")]
    pub macro_avg: Metrics,
    #[serde(skip)]
    pub per_user: Vec<UserEval>,
}

impl EvalReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// One line per evaluated user.
    pub fn user_lines(&self) -> Vec<String> {
        #[derive(Serialize)]
        struct Line<'a> {
            schema: &'static str,
            split: &'a str,
            #[serde(flatten)]
            user: &'a UserEval,
        }
        self.per_user
            .iter()
            .map(|u| {
                serde_json::to_string(&Line {
                    schema: USER_SCHEMA,
                    split: &self.split,
                    user: u,
                })
                .expect("user line serializes")
            })
            .collect()
    }
}

/// Evaluation settings that are not part of the recommender itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub split: String,
    pub context: ContextQuery,
    pub threshold: u8,
    /// Seed the split was drawn with, echoed in the report.
    pub seed: Option<u64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            split: "custom".into(),
            context: ContextQuery::empty(),
            threshold: DEFAULT_THRESHOLD,
            seed: None,
        }
    }
}

enum Outcome {
    Done(UserEval),
    NotInTrain,
    ColdStart,
}

/// Recommends `config.n` items from `train` for every user with a test
/// rating, and counts them against the test ratings at or above the
/// threshold. Both sides are restricted to `settings.context` first.
pub fn evaluate_topn(
    train: &Dataset,
    test: &Dataset,
    config: &EngineConfig,
    settings: &EvalSettings,
    registry: &StrategyRegistry,
) -> Result<EvalReport, EvalError> {
    if test.ratings().is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let prepared = Prepared::new(train, &settings.context, config, registry)?;
    let engine = prepared.fit();
    let test = prefilter(test, &settings.context);
    let users: Vec<UserId> = test.active_users().collect();

    let outcomes: Vec<Outcome> = users
        .par_iter()
        .map(|&user| {
            if !prepared.data.is_user_active(user) {
                return Ok(Outcome::NotInTrain);
            }
            let list = match engine.recommend(user) {
                Ok(list) => list,
                Err(PipelineError::ColdStart { .. }) => return Ok(Outcome::ColdStart),
                Err(e) => return Err(e),
            };
            let relevant: BTreeSet<ItemId> = test
                .ratings_of_user(user)
                .filter(|r| r.rating.get() >= settings.threshold)
                .map(|r| r.item_id)
                .collect();
            let retrieved = list.items();
            let n_hit = retrieved.iter().filter(|i| relevant.contains(i)).count();
            Ok(Outcome::Done(UserEval {
                user_id: user,
                n_retrieved: retrieved.len(),
                n_relevant: relevant.len(),
                n_hit,
                metrics: Metrics::from_counts(retrieved.len(), relevant.len(), n_hit),
            }))
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut per_user = Vec::new();
    let (mut not_in_train, mut cold) = (0, 0);
    for o in outcomes {
        match o {
            Outcome::Done(u) => per_user.push(u),
            Outcome::NotInTrain => not_in_train += 1,
            Outcome::ColdStart => cold += 1,
        }
    }
    let n_retrieved = per_user.iter().map(|u| u.n_retrieved).sum();
    let n_relevant = per_user.iter().map(|u| u.n_relevant).sum();
    let n_hit = per_user.iter().map(|u| u.n_hit).sum();
    let macro_avg = if per_user.is_empty() {
        Metrics::default()
    } else {
        let k = per_user.len() as f64;
        Metrics {
            precision: per_user.iter().map(|u| u.metrics.precision).sum::<f64>() / k,
            recall: per_user.iter().map(|u| u.metrics.recall).sum::<f64>() / k,
            fmeasure: per_user.iter().map(|u| u.metrics.fmeasure).sum::<f64>() / k,
        }
    };
    if not_in_train + cold > 0 {
        log::warn!(
            "{}: skipped {not_in_train} users absent from train and {cold} without a neighborhood",
            settings.split
        );
    }
    Ok(EvalReport {
        schema: REPORT_SCHEMA,
        split: settings.split.clone(),
        context: settings.context,
        policy: settings.context.policy,
        threshold: settings.threshold,
        seed: settings.seed,
        config: config.clone(),
        users_evaluated: per_user.len(),
        skipped_not_in_train: not_in_train,
        skipped_cold_start: cold,
        n_retrieved,
        n_relevant,
        n_hit,
        micro: Metrics::from_counts(n_retrieved, n_relevant, n_hit),
        macro_avg,
        per_user,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub splits: usize,
    pub failed: usize,
    pub mean: Metrics,
    /// Sample standard deviation; 0 for a single split.
    pub stddev: Metrics,
}

impl Summary {
    pub fn of(reports: &[&EvalReport], failed: usize) -> Self {
        let pick = |f: fn(&Metrics) -> f64| -> (f64, f64) {
            let xs: Vec<f64> = reports.iter().map(|r| f(&r.micro)).collect();
            mean_and_stddev(&xs)
        };
        let (p, sp) = pick(|m| m.precision);
        let (r, sr) = pick(|m| m.recall);
        let (f, sf) = pick(|m| m.fmeasure);
        Summary {
            schema: SUMMARY_SCHEMA,
            splits: reports.len(),
            failed,
            mean: Metrics {
                precision: p,
                recall: r,
                fmeasure: f,
            },
            stddev: Metrics {
                precision: sp,
                recall: sr,
                fmeasure: sf,
            },
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }
}

fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug)]
pub struct SplitOutcome {
    pub split: String,
    pub result: Result<EvalReport, EvalError>,
}

#[derive(Debug)]
pub struct CrossValidation {
    pub outcomes: Vec<SplitOutcome>,
    pub summary: Summary,
}

impl CrossValidation {
    pub fn reports(&self) -> Vec<&EvalReport> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .collect()
    }
}

/// Runs [`evaluate_topn`] on each split of `d`. A failing split keeps its
/// error and is left out of the summary.
pub fn cross_validate(
    d: &Dataset,
    splits: &[SplitSpec],
    config: &EngineConfig,
    settings: &EvalSettings,
    registry: &StrategyRegistry,
) -> CrossValidation {
    let outcomes: Vec<SplitOutcome> = splits
        .iter()
        .map(|spec| {
            let settings = EvalSettings {
                split: spec.to_string(),
                seed: Some(spec.seed),
                ..settings.clone()
            };
            let result =
                generate_splits(d, spec)
                    .map_err(EvalError::from)
                    .and_then(|(train, test)| {
                        evaluate_topn(&train, &test, config, &settings, registry)
                    });
            SplitOutcome {
                split: settings.split,
                result,
            }
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    let reports: Vec<&EvalReport> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .collect();
    let summary = Summary::of(&reports, failed);
    CrossValidation { outcomes, summary }
}

/// Human-readable table of reports, with a mean/stddev footer when given.
pub fn render_table(reports: &[&EvalReport], summary: Option<&Summary>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>6} {:>7} {:>8} {:>8} {:>7} {:>9} {:>9} {:>9}",
        "split", "users", "skipped", "N", "Np", "Nt", "precision", "recall", "F"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>7} {:>8} {:>8} {:>7} {:>9.4} {:>9.4} {:>9.4}",
            r.split,
            r.users_evaluated,
            r.skipped_not_in_train + r.skipped_cold_start,
            r.n_retrieved,
            r.n_relevant,
            r.n_hit,
            r.micro.precision,
            r.micro.recall,
            r.micro.fmeasure
        );
    }
    if let Some(sum) = summary {
        for (label, m) in [("mean", sum.mean), ("stddev", sum.stddev)] {
            let _ = writeln!(
                s,
                "{label:<12} {:>6} {:>7} {:>8} {:>8} {:>7} {:>9.4} {:>9.4} {:>9.4}",
                "", "", "", "", "", m.precision, m.recall, m.fmeasure
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_dataset, Movie, Rating, RatingRecord, SourceTag, UserProfile};

    #[test]
    fn fmeasure_examples() {
        assert!((fmeasure(0.73, 0.27).unwrap() - 0.394).abs() < 5e-4);
        assert!((fmeasure(0.729966, 0.270034).unwrap() - 0.3942).abs() < 5e-4);
        assert_eq!(fmeasure(0.5, 0.5).unwrap(), 0.5);
        assert_eq!(fmeasure(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(
            fmeasure(1.2, 0.1),
            Err(EvalError::OutOfRange {
                name: "precision",
                ..
            })
        ));
        assert!(fmeasure(0.1, -0.1).is_err());
    }

    #[test]
    fn zero_denominators() {
        assert_eq!(precision(0, 0), 0.0);
        assert_eq!(recall(0, 0), 0.0);
        assert_eq!(Metrics::from_counts(10, 0, 0), Metrics::default());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_and_stddev(&[0.4]), (0.4, 0.0));
        let (m, s) = mean_and_stddev(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    fn rec(u: u32, i: u32, r: i64) -> RatingRecord {
        RatingRecord::new(u, i, Rating::new(r).unwrap())
    }

    fn dataset(ratings: Vec<RatingRecord>) -> Dataset {
        make_dataset(
            (1..=4).map(UserProfile::bare).collect(),
            (1..=6)
                .map(|i| Movie::new(i, format!("m{i}"), [0]))
                .collect(),
            ratings,
            vec!["g".into()],
            SourceTag::Synthetic,
        )
        .unwrap()
    }

    #[test]
    fn skipped_users_are_counted() {
        let train = dataset(vec![
            rec(1, 1, 5),
            rec(1, 2, 4),
            rec(2, 1, 4),
            rec(2, 2, 5),
            rec(2, 3, 5),
            rec(3, 6, 2),
        ]);
        let test = dataset(vec![rec(1, 3, 5), rec(3, 1, 4), rec(4, 2, 5)]);
        let cfg = EngineConfig {
            n: 5,
            ..Default::default()
        };
        let r = evaluate_topn(
            &train,
            &test,
            &cfg,
            &EvalSettings::default(),
            &StrategyRegistry::with_defaults(),
        )
        .unwrap();
        assert_eq!(r.users_evaluated, 1);
        assert_eq!(r.skipped_not_in_train, 1);
        assert_eq!(r.skipped_cold_start, 1);
        assert_eq!((r.n_relevant, r.n_hit), (1, 1));
        let line = r.to_json_line();
        assert!(
            line.starts_with("{\"schema\":\"ahprec.evalreport/1\""),
            "{line}"
        );
        assert!(line.contains("\"macro\":{"));
        assert!(line.contains("\"k\":30"));
        assert!(render_table(&[&r], None).lines().count() == 2);
    }

    #[test]
    fn empty_test_is_an_error() {
        let train = dataset(vec![rec(1, 1, 5)]);
        assert!(matches!(
            evaluate_topn(
                &train,
                &dataset(vec![]),
                &EngineConfig::default(),
                &EvalSettings::default(),
                &StrategyRegistry::with_defaults()
            ),
            Err(EvalError::EmptyTest)
        ));
    }
}
