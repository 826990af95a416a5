//! Dataset loaders and writers for the MovieLens ml-100k and LDOS-CoMoDa
//! formats, plus the standard train/test split generators.

mod comoda;
mod movielens;
mod split;
pub mod synthetic;

pub use comoda::{
    load_comoda, load_comoda_with_report, parse_comoda, write_comoda, Delimiter, COMODA_COLUMNS,
    COMODA_GENRES,
};
pub use movielens::{
    load_movielens, load_movielens_split, load_movielens_with_report, read_ratings_file,
    write_movielens, write_ratings,
};
pub use split::{generate_splits, SplitName, SplitSpec, DEFAULT_SPLIT_SEED};

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Dataset, ModelError, UserId};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {message}")]
    Integrity { file: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{count} users have fewer than {needed} ratings: {}", preview(.users))]
    TooFewRatings {
        needed: usize,
        count: usize,
        users: Vec<UserId>,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid generator config: {0}")]
    Config(String),
}

fn preview(users: &[UserId]) -> String {
    let mut s: Vec<String> = users.iter().take(20).map(ToString::to_string).collect();
    if users.len() > 20 {
        s.push("...".into());
    }
    s.join(", ")
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(file: &str, line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}

/// Counts and warnings from one load, printed line by line to stderr by the CLI.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    pub path: String,
    pub format: &'static str,
    pub delimiter: Option<Delimiter>,
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub inactive_users: usize,
    pub inactive_items: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub(crate) fn new(path: &Path, format: &'static str) -> Self {
        LoadReport {
            path: path.display().to_string(),
            format,
            ..Default::default()
        }
    }

    pub(crate) fn count(&mut self, d: &Dataset) {
        (self.users, self.items, self.ratings) = d.counts();
        self.inactive_users = d.inactive_users().len();
        self.inactive_items = d.inactive_items().len();
    }

    pub(crate) fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::debug!("{message}");
        self.warnings.push(message);
    }

    /// `"943 users, 1682 items, 100000 ratings"`.
    pub fn summary(&self) -> String {
        format!(
            "{} users, {} items, {} ratings",
            self.users, self.items, self.ratings
        )
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "loaded {} ({})", self.path, self.format)?;
        if let Some(d) = self.delimiter {
            writeln!(f, "delimiter: {d}")?;
        }
        writeln!(f, "{}", self.summary())?;
        if self.inactive_users + self.inactive_items > 0 {
            writeln!(
                f,
                "inactive: {} users, {} items",
                self.inactive_users, self.inactive_items
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Reads a text file, accepting UTF-8 and falling back to Latin-1.
pub(crate) fn read_text(path: &Path) -> Result<String, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| char::from(b)).collect(),
    })
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}
