//! Similarity cache file.
//!
//! Plain text, one header line then one tab-separated record per pair:
//!
//! ```text
//! # ahprec-simcache v1 measure=itemcos min_overlap=2
//! <id_a>\t<id_b>\t<value>\t<overlap>
//! ```
//!
//! `id_a < id_b`; values are written in shortest round-trip form, so a
//! cache reads back bit-identical.

use std::io::{BufRead, Write};

use super::{CfError, SimilarityScore};

pub const CACHE_MAGIC: &str = "ahprec-simcache";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityCache {
    pub measure: String,
    pub min_overlap: usize,
    pub entries: Vec<(u32, u32, SimilarityScore)>,
}

impl SimilarityCache {
    pub fn write_to(&self, mut w: impl Write) -> Result<(), CfError> {
        writeln!(
            w,
            "# {CACHE_MAGIC} v{CACHE_VERSION} measure={} min_overlap={}",
            self.measure, self.min_overlap
        )?;
        for (a, b, s) in &self.entries {
            writeln!(w, "{a}\t{b}\t{}\t{}", s.value, s.overlap)?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, CfError> {
        let err = |line: usize, message: &str| CfError::Cache {
            line,
            message: message.to_string(),
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file"))??;
        let mut fields = header.trim_start_matches('#').split_whitespace();
        if fields.next() != Some(CACHE_MAGIC) {
            return Err(err(1, "missing ahprec-simcache header"));
        }
        if fields.next() != Some(&format!("v{CACHE_VERSION}")) {
            return Err(err(1, "unsupported cache version"));
        }
        let (mut measure, mut min_overlap) = (None, None);
        for kv in fields {
            match kv.split_once('=') {
                Some(("measure", v)) => measure = Some(v.to_string()),
                Some(("min_overlap", v)) => min_overlap = v.parse().ok(),
                _ => return Err(err(1, &format!("unknown header field `{kv}`"))),
            }
        }
        let mut entries = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let no = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(err(no, "expected 4 tab-separated fields"));
            }
            let a: u32 = cols[0].parse().map_err(|_| err(no, "bad id"))?;
            let b: u32 = cols[1].parse().map_err(|_| err(no, "bad id"))?;
            let value: f64 = cols[2].parse().map_err(|_| err(no, "bad value"))?;
            let overlap: usize = cols[3].parse().map_err(|_| err(no, "bad overlap"))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(err(no, "similarity outside [-1, 1]"));
            }
            entries.push((a, b, SimilarityScore { value, overlap }));
        }
        Ok(SimilarityCache {
            measure: measure.ok_or_else(|| err(1, "missing measure"))?,
            min_overlap: min_overlap.ok_or_else(|| err(1, "missing min_overlap"))?,
            entries,
        })
    }
}
