//! Run configuration: command-line flags over a flat `key = value` file over
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ahprec::contextfilter::{ContextQuery, MatchPolicy};
use ahprec::eval::DEFAULT_THRESHOLD;
use ahprec::ingest::{SplitSpec, DEFAULT_SPLIT_SEED};
use ahprec::model::SourceTag;
use ahprec::pipeline::EngineConfig;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::error::CliError;

pub const DATA_ROOT_VAR: &str = "AHPREC_DATA_ROOT";

pub const CONFIG_KEYS: &[&str] = &[
    "dataset",
    "format",
    "split",
    "context",
    "policy",
    "k",
    "min_overlap",
    "alpha",
    "n",
    "threshold",
    "measure",
    "variant",
    "weights",
    "genre_aggregate",
    "seed",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Movielens,
    Comoda,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

impl Format {
    pub fn source(self) -> SourceTag {
        match self {
            Format::Movielens => SourceTag::Movielens,
            Format::Comoda => SourceTag::Comoda,
        }
    }

    /// A directory is read as ml-100k, a file as CoMoDa.
    fn detect(path: &Path) -> Self {
        if path.is_dir() {
            Format::Movielens
        } else {
            Format::Comoda
        }
    }
}

/// Flags shared by the data-driven subcommands. Every one is optional so
/// that the config file and the defaults can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// ml-100k directory or CoMoDa file [default: $AHPREC_DATA_ROOT].
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Dataset format [default: directory → movielens, file → comoda].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated splits: u1..u5, ua, ub, custom:<train fraction>.
    #[arg(long)]
    pub split: Option<String>,
    /// Context constraints, e.g. "time=3,mood=1".
    #[arg(long)]
    pub context: Option<String>,
    /// strict or permissive treatment of missing context values.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub min_overlap: Option<usize>,
    /// Weight of the CF prediction in the fused score.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Recommendations per user.
    #[arg(long)]
    pub n: Option<usize>,
    /// Lowest test rating counted as relevant.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// pearson, cosine, spearman or itemcos.
    #[arg(long)]
    pub measure: Option<String>,
    /// plain or mean-centered.
    #[arg(long)]
    pub variant: Option<String>,
    /// frequency, frequency:saaty9 or file:<path>.
    #[arg(long)]
    pub weights: Option<String>,
    /// mean or max.
    #[arg(long)]
    pub genre_aggregate: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parsed `key = value` lines. `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    source: String,
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{source}:{}: expected key = value", k + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{source}:{}: unknown key `{key}` (known: {})",
                    k + 1,
                    CONFIG_KEYS.join(", ")
                )));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Usage(format!(
                    "{source}:{}: `{key}` set twice",
                    k + 1
                )));
            }
        }
        Ok(FileConfig {
            source: source.to_string(),
            values,
        })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Domain(format!("{}: {key}: {e}", self.source)))
            })
            .transpose()
    }
}

/// The effective configuration of a run, echoed into its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub schema: &'static str,
    pub dataset: PathBuf,
    pub format: Format,
    pub splits: Vec<String>,
    pub context: ContextQuery,
    pub policy: MatchPolicy,
    pub threshold: u8,
    pub seed: u64,
    #[serde(flatten)]
    pub engine: EngineConfig,
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub split_specs: Vec<SplitSpec>,
}

fn domain<T, E: Display>(what: &str, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Domain(format!("{what}: {e}")))
}

/// Flag if given, else the file value, else `None`.
fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn pick_str<T: FromStr>(
    flag: Option<&str>,
    file: &FileConfig,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    match flag {
        Some(v) => domain(key, v.parse::<T>()).map(Some),
        None => file.get(key),
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let dataset = match pick(self.dataset.clone(), &file, "dataset")? {
            Some(p) => p,
            None => std::env::var_os(DATA_ROOT_VAR)
                .map(PathBuf::from)
                .ok_or_else(|| {
                    CliError::Usage(format!("no dataset: pass --dataset or set {DATA_ROOT_VAR}"))
                })?,
        };
        let format =
            pick(self.format, &file, "format")?.unwrap_or_else(|| Format::detect(&dataset));

        let mut engine = EngineConfig::for_source(format.source());
        if let Some(v) = pick(self.k, &file, "k")? {
            engine.cf.k = v;
        }
        if let Some(v) = pick(self.min_overlap, &file, "min_overlap")? {
            engine.cf.min_overlap = v;
        }
        if let Some(v) = pick(self.alpha, &file, "alpha")? {
            engine.alpha = v;
        }
        if let Some(v) = pick(self.n, &file, "n")? {
            engine.n = v;
        }
        if let Some(v) = pick_str::<String>(self.measure.as_deref(), &file, "measure")? {
            engine.measure = v;
        }
        if let Some(v) = pick_str(self.variant.as_deref(), &file, "variant")? {
            engine.cf.variant = v;
        }
        if let Some(v) = pick_str(self.weights.as_deref(), &file, "weights")? {
            engine.weights = v;
        }
        if let Some(v) = pick_str(self.genre_aggregate.as_deref(), &file, "genre_aggregate")? {
            engine.genre_aggregate = v;
        }
        domain("config", engine.validate())?;

        let policy: MatchPolicy =
            pick_str(self.policy.as_deref(), &file, "policy")?.unwrap_or_default();
        let context = pick_str::<ContextQuery>(self.context.as_deref(), &file, "context")?
            .unwrap_or_default()
            .with_policy(policy);
        let threshold = pick(self.threshold, &file, "threshold")?.unwrap_or(DEFAULT_THRESHOLD);
        if !(1..=5).contains(&threshold) {
            return Err(CliError::Domain(format!(
                "threshold {threshold} outside 1..=5"
            )));
        }
        let seed = pick(self.seed, &file, "seed")?.unwrap_or(DEFAULT_SPLIT_SEED);
        let split_text =
            pick_str::<String>(self.split.as_deref(), &file, "split")?.unwrap_or_else(|| {
                match format {
                    Format::Movielens => "u1".into(),
                    Format::Comoda => "custom:0.8".into(),
                }
            });
        let split_specs = split_text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| domain("split", s.parse::<SplitSpec>()).map(|sp| sp.with_seed(seed)))
            .collect::<Result<Vec<_>, _>>()?;
        if split_specs.is_empty() {
            return Err(CliError::Domain("split: no split given".into()));
        }
        Ok(RunConfig {
            schema: "ahprec.runconfig/1",
            dataset,
            format,
            splits: split_specs.iter().map(ToString::to_string).collect(),
            context,
            policy,
            threshold,
            seed,
            engine,
            out: pick(self.out.clone(), &file, "out")?,
            split_specs,
        })
    }
}
