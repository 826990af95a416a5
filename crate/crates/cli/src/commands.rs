use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ahprec::ahp::{
    consistency_with, normalize_measurements, principal_eigenpair, ComparisonMatrix,
    ConsistencyOptions,
};
use ahprec::cf::StrategyRegistry;
use ahprec::eval::{
    cross_validate, evaluate_topn, render_table, EvalReport, EvalSettings, Summary,
};
use ahprec::ingest::{
    generate_splits, load_comoda_with_report, load_movielens_split, load_movielens_with_report,
    write_comoda, write_ratings, Delimiter, SplitName,
};
use ahprec::model::Dataset;
use ahprec::pipeline::Prepared;
use clap::Args;

use crate::config::{Format, RunArgs, RunConfig};
use crate::error::CliError;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
        _ => Ok(()),
    }
}

/// To `out` when given, else to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => stdout(text),
    }
}

fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let (d, report) = match cfg.format {
        Format::Movielens => load_movielens_with_report(&cfg.dataset)?,
        Format::Comoda => load_comoda_with_report(&cfg.dataset)?,
    };
    eprint!("{report}");
    Ok(d)
}

pub fn ingest(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    let (d, report) = match cfg.format {
        Format::Movielens => load_movielens_with_report(&cfg.dataset)?,
        Format::Comoda => load_comoda_with_report(&cfg.dataset)?,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut s = format!("{}\n", report.summary());
    let _ = writeln!(s, "genres: {}", d.genre_catalog().len());
    if report.inactive_users + report.inactive_items > 0 {
        let _ = writeln!(
            s,
            "inactive: {} users, {} items",
            report.inactive_users, report.inactive_items
        );
    }
    stdout(&s)
}

pub fn split(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("split needs --out <directory>".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let d = load(&cfg)?;
    let mut summary = String::new();
    for spec in &cfg.split_specs {
        let (train, test) = generate_splits(&d, spec)?;
        let stem = spec.name.to_string();
        for (half, ext) in [(&train, "base"), (&test, "test")] {
            let mut bytes = Vec::new();
            let path = match cfg.format {
                Format::Movielens => {
                    let path = dir.join(format!("{stem}.{ext}"));
                    write_ratings(half, &mut bytes).map_err(|e| CliError::io(&path, e))?;
                    path
                }
                Format::Comoda => {
                    write_comoda(half, &mut bytes, Delimiter::Tab)?;
                    dir.join(format!("{stem}.{ext}.tsv"))
                }
            };
            write_atomic(&path, &bytes)?;
        }
        let _ = writeln!(
            summary,
            "{spec}\ttrain {}\ttest {}",
            train.ratings().len(),
            test.ratings().len()
        );
    }
    stdout(&summary)
}

pub fn weights(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    let d = load(&cfg)?;
    let registry = StrategyRegistry::with_defaults();
    let p = Prepared::new(&d, &cfg.context, &cfg.engine, &registry)?;
    let mut s = format!("# weights: {}", cfg.engine.weights);
    if !cfg.context.is_empty() {
        let _ = write!(s, ", context {}", cfg.context);
    }
    let _ = writeln!(s, ", {} ratings", p.data.ratings().len());
    let freq = p.judgments.as_ref().map(|j| &j.frequencies);
    let _ = writeln!(s, "genre\tweight\tfrequency");
    for (name, w) in p.weights.ranked() {
        let f = freq
            .and_then(|f| {
                d.genre_catalog()
                    .iter()
                    .position(|g| g == name)
                    .map(|k| f[k].to_string())
            })
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{name}\t{w:.4}\t{f}");
    }
    if let Some(j) = &p.judgments {
        let _ = writeln!(s, "lambda_max\t{:.4}", j.lambda_max);
        let _ = writeln!(s, "CI\t{:.4}", j.ci);
        match &j.consistency {
            Some(c) => {
                let _ = writeln!(s, "RC\t{:.1}%\t{}", c.cr, verdict(c.acceptable));
            }
            None => {
                let _ = writeln!(
                    s,
                    "RC\tn/a (no random index for {} genres)",
                    d.genre_catalog().len()
                );
            }
        }
        if !j.zero_frequency.is_empty() {
            let _ = writeln!(s, "unrated\t{}", j.zero_frequency.join(", "));
        }
    }
    emit(cfg.out.as_deref(), &s)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "acceptable"
    } else {
        "inconsistent"
    }
}

#[derive(Debug, Clone, Args)]
pub struct AhpArgs {
    /// Judgment-matrix file: order n, then n rows; entries may be p/q fractions.
    #[arg(long, value_name = "PATH")]
    pub matrix: Vec<PathBuf>,
    /// Positive measurements to normalize, comma-separated.
    #[arg(long, value_name = "X,Y,...")]
    pub measurements: Option<String>,
    /// Use the random index table up to n = 15.
    #[arg(long)]
    pub extended_aci: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn fmt_weights(w: &[f64]) -> String {
    w.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn ahp(args: &AhpArgs) -> Result<(), CliError> {
    if args.matrix.is_empty() && args.measurements.is_none() {
        return Err(CliError::Usage(
            "ahp needs --matrix or --measurements".into(),
        ));
    }
    let mut s = String::new();
    for path in &args.matrix {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m = ComparisonMatrix::parse(&text)
            .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        let pair = principal_eigenpair(&m)?;
        let _ = writeln!(s, "matrix\t{}\tn = {}", path.display(), m.order());
        let _ = writeln!(s, "lambda_max\t{:.4}", pair.lambda_max);
        let _ = writeln!(s, "weights\t{}", fmt_weights(pair.vector.weights()));
        let opts = ConsistencyOptions {
            extended_aci: args.extended_aci,
            ..Default::default()
        };
        match consistency_with(&m, opts) {
            Ok(c) => {
                let _ = writeln!(s, "CI\t{:.4}", c.ci);
                let _ = writeln!(s, "RC\t{:.1}%\t{}", c.cr, verdict(c.acceptable));
            }
            Err(e) => {
                let ci = (pair.lambda_max - m.order() as f64) / (m.order() as f64 - 1.0);
                let _ = writeln!(s, "CI\t{ci:.4}");
                let _ = writeln!(s, "RC\tn/a ({e})");
            }
        }
    }
    if let Some(raw) = &args.measurements {
        let values = raw
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Domain(format!("bad measurement `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let p = normalize_measurements(&values)?;
        let _ = writeln!(s, "measurements\t{}", fmt_weights(p.weights()));
    }
    emit(args.out.as_deref(), &s)
}

#[derive(Debug, Clone, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub user: u32,
}

pub fn recommend(args: &RecommendArgs) -> Result<(), CliError> {
    let cfg = args.run.resolve()?;
    let d = load(&cfg)?;
    let registry = StrategyRegistry::with_defaults();
    let prepared = Prepared::new(&d, &cfg.context, &cfg.engine, &registry)?;
    let list = prepared.fit().recommend(args.user)?;
    if list.entries.len() < cfg.engine.n {
        log::warn!(
            "only {} candidates for user {} (asked for {})",
            list.entries.len(),
            args.user,
            cfg.engine.n
        );
    }
    let mut s = String::from("rank\titem_id\ttitle\tfused\tcf\tgenre\tgenres\n");
    for (rank, e) in list.entries.iter().enumerate() {
        let movie = d
            .movie(e.item_id)
            .expect("recommended item is in the catalog");
        let genres: Vec<&str> = movie
            .genres
            .iter()
            .filter_map(|&g| d.genre_name(g))
            .collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            rank + 1,
            e.item_id,
            movie.title,
            e.fused,
            e.cf,
            e.genre,
            genres.join("|")
        );
    }
    emit(cfg.out.as_deref(), &s)
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Read `<split>.base` / `<split>.test` from the ml-100k directory
    /// instead of generating the split.
    #[arg(long)]
    pub split_files: bool,
    /// Print JSON lines on stdout instead of the table.
    #[arg(long)]
    pub json: bool,
}

struct Outcome {
    split: String,
    result: Result<EvalReport, CliError>,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let cfg = args.run.resolve()?;
    let d = load(&cfg)?;
    let registry = StrategyRegistry::with_defaults();
    let settings = EvalSettings {
        split: String::new(),
        context: cfg.context,
        threshold: cfg.threshold,
        seed: Some(cfg.seed),
    };
    let outcomes: Vec<Outcome> = if args.split_files {
        if cfg.format != Format::Movielens {
            return Err(CliError::Usage(
                "--split-files needs a movielens dataset".into(),
            ));
        }
        cfg.split_specs
            .iter()
            .map(|spec| {
                let split = spec.to_string();
                let result = (|| {
                    if spec.name == SplitName::Custom {
                        return Err(CliError::Domain("custom splits have no files".into()));
                    }
                    let (train, test) = load_movielens_split(&cfg.dataset, &split)?;
                    let settings = EvalSettings {
                        split: split.clone(),
                        seed: None,
                        ..settings.clone()
                    };
                    Ok(evaluate_topn(
                        &train,
                        &test,
                        &cfg.engine,
                        &settings,
                        &registry,
                    )?)
                })();
                Outcome { split, result }
            })
            .collect()
    } else {
        cross_validate(&d, &cfg.split_specs, &cfg.engine, &settings, &registry)
            .outcomes
            .into_iter()
            .map(|o| Outcome {
                split: o.split,
                result: o.result.map_err(CliError::from),
            })
            .collect()
    };

    let reports: Vec<&EvalReport> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .collect();
    let failed: Vec<(&str, &CliError)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().err().map(|e| (o.split.as_str(), e)))
        .collect();
    let summary = (outcomes.len() > 1).then(|| Summary::of(&reports, failed.len()));

    let mut json = serde_json::to_string(&cfg).expect("config serializes");
    json.push('\n');
    for o in &outcomes {
        match &o.result {
            Ok(r) => {
                json.push_str(&r.to_json_line());
                json.push('\n');
                for line in r.user_lines() {
                    json.push_str(&line);
                    json.push('\n');
                }
            }
            Err(e) => {
                let line = serde_json::json!({
                    "schema": "ahprec.evalerror/1",
                    "split": o.split,
                    "error": e.to_string(),
                });
                json.push_str(&line.to_string());
                json.push('\n');
            }
        }
    }
    if let Some(s) = &summary {
        json.push_str(&s.to_json_line());
        json.push('\n');
    }

    if let Some(out) = &cfg.out {
        write_atomic(out, json.as_bytes())?;
    }
    if args.json {
        stdout(&json)?;
    } else {
        stdout(&render_table(&reports, summary.as_ref()))?;
    }
    for (split, e) in &failed {
        eprintln!("error: {split}: {e}");
    }
    match failed.first() {
        None => Ok(()),
        Some(_) if failed.len() == outcomes.len() && failed.len() == 1 => {
            let o = outcomes.into_iter().next().expect("one outcome");
            Err(o.result.expect_err("the split failed"))
        }
        Some(_) => Err(CliError::Domain(format!(
            "{} of {} splits failed",
            failed.len(),
            outcomes.len()
        ))),
    }
}
