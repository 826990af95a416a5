use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::PipelineError;
use crate::ahp::{
    consistency_with, principal_eigenpair, ComparisonMatrix, ConsistencyOptions, ConsistencyReport,
    PriorityVector, Scale,
};
use crate::model::{Dataset, GenreId, Movie};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProvenance {
    EigenFromJudgments,
    EigenFromFrequency,
    ExternalTable,
}

/// One weight per genre of a dataset's catalog, in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenreWeights {
    names: Vec<String>,
    weights: Vec<f64>,
    pub normalized: bool,
    pub provenance: WeightProvenance,
    /// Sum of the weights before normalization, for external tables.
    pub raw_sum: Option<f64>,
}

impl GenreWeights {
    /// Normalized weights from a priority vector over `catalog`.
    pub fn from_priorities(
        catalog: &[String],
        p: &PriorityVector,
        provenance: WeightProvenance,
    ) -> Result<Self, PipelineError> {
        if p.len() != catalog.len() {
            return Err(PipelineError::Weights(format!(
                "{} weights for a catalog of {} genres",
                p.len(),
                catalog.len()
            )));
        }
        Ok(GenreWeights {
            names: catalog.to_vec(),
            weights: p.weights().to_vec(),
            normalized: true,
            provenance,
            raw_sum: None,
        })
    }

    /// Principal-eigenvector weights of a genre judgment matrix.
    pub fn from_judgments(catalog: &[String], m: &ComparisonMatrix) -> Result<Self, PipelineError> {
        let pair = principal_eigenpair(m)?;
        Self::from_priorities(catalog, &pair.vector, WeightProvenance::EigenFromJudgments)
    }

    /// Reads `genre<TAB>weight` lines (blank lines and `#` comments ignored),
    /// matches names to `catalog` case-insensitively and normalizes.
    /// Catalog genres missing from the table get weight 0; table genres
    /// missing from the catalog are ignored. Both are reported in the log.
    pub fn parse_table(
        catalog: &[String],
        text: &str,
        source: &str,
    ) -> Result<Self, PipelineError> {
        let mut raw: Vec<Option<f64>> = vec![None; catalog.len()];
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| PipelineError::Weights(format!("{source}:{}: {m}", no + 1));
            let (name, value) = line
                .rsplit_once(['\t', ' '])
                .ok_or_else(|| bad("expected `genre<TAB>weight`"))?;
            let value: f64 = value
                .trim()
                .replace(',', ".")
                .parse()
                .map_err(|_| bad(&format!("weight `{value}` is not a number")))?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(bad(&format!("weight {value} must be >= 0")));
            }
            let name = name.trim();
            match catalog.iter().position(|g| g.eq_ignore_ascii_case(name)) {
                Some(g) if raw[g].is_some() => {
                    return Err(bad(&format!("genre `{name}` listed twice")))
                }
                Some(g) => raw[g] = Some(value),
                None => log::warn!("{source}: genre `{name}` is not in the catalog; ignored"),
            }
        }
        let missing: Vec<&str> = catalog
            .iter()
            .zip(&raw)
            .filter(|(_, w)| w.is_none())
            .map(|(g, _)| g.as_str())
            .collect();
        if !missing.is_empty() {
            log::warn!("{source}: no weight for {}; using 0", missing.join(", "));
        }
        let raw: Vec<f64> = raw.into_iter().map(|w| w.unwrap_or(0.0)).collect();
        let sum: f64 = raw.iter().sum();
        let p = PriorityVector::normalized(raw)
            .ok_or_else(|| PipelineError::Weights(format!("{source}: weights sum to {sum}")))?;
        if (sum - 1.0).abs() > PriorityVector::SUM_TOLERANCE {
            log::warn!("{source}: raw weights sum to {sum:.4}, normalized to 1");
        }
        let mut w = Self::from_priorities(catalog, &p, WeightProvenance::ExternalTable)?;
        w.raw_sum = Some(sum);
        Ok(w)
    }

    pub fn load_table(catalog: &[String], path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse_table(catalog, &text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, g: GenreId) -> Option<f64> {
        self.weights.get(usize::from(g)).copied()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
    }

    /// `(genre, weight)` by descending weight, ties in catalog order.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }
}

impl fmt::Display for GenreWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (rank, (name, w)) in self.ranked().into_iter().enumerate() {
            writeln!(f, "{:>3}  {name:<14} {w:.4}  {:>6.2}%", rank + 1, 100.0 * w)?;
        }
        Ok(())
    }
}

/// Where a run takes its genre weights from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Frequency(Scale),
    Table(std::path::PathBuf),
}

impl Default for WeightSource {
    fn default() -> Self {
        WeightSource::Frequency(Scale::Approach5)
    }
}

impl FromStr for WeightSource {
    type Err = PipelineError;

    /// `frequency`, `frequency:saaty9` or `file:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(WeightSource::Table(path.into()));
        }
        match s.split_once(':') {
            None if s == "frequency" => Ok(WeightSource::default()),
            Some(("frequency", scale)) => Ok(WeightSource::Frequency(
                scale.parse().map_err(PipelineError::Weights)?,
            )),
            _ => Err(PipelineError::Weights(format!(
                "unknown weight source `{s}` (expected frequency[:scale] or file:<path>)"
            ))),
        }
    }
}

impl fmt::Display for WeightSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSource::Frequency(Scale::Approach5) => f.write_str("frequency"),
            WeightSource::Frequency(s) => write!(f, "frequency:{s}"),
            WeightSource::Table(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for WeightSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Ratings per genre: how many ratings fall on an item carrying it.
pub fn genre_frequencies(d: &Dataset) -> Vec<usize> {
    let mut freq = vec![0; d.genre_catalog().len()];
    for r in d.ratings() {
        if let Some(m) = d.movie(r.item_id) {
            for &g in &m.genres {
                if let Some(f) = freq.get_mut(usize::from(g)) {
                    *f += 1;
                }
            }
        }
    }
    freq
}

/// The pairwise genre matrix of a corpus and its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyJudgments {
    pub scale: Scale,
    pub frequencies: Vec<usize>,
    #[serde(skip)]
    pub matrix: ComparisonMatrix,
    pub lambda_max: f64,
    pub ci: f64,
    /// Present when the random index is tabulated for the catalog size.
    pub consistency: Option<ConsistencyReport>,
    pub zero_frequency: Vec<String>,
}

/// Builds the genre comparison matrix from rating frequencies: the entry for
/// `(g, h)` with `freq(g) >= freq(h) > 0` is the ratio quantized to `scale`,
/// and its mirror is the reciprocal. A genre nobody rated gets `1/max_degree`
/// against every rated genre and 1 against other unrated genres.
pub fn genre_matrix_from_frequencies(
    d: &Dataset,
    scale: Scale,
) -> Result<FrequencyJudgments, PipelineError> {
    let n = d.genre_catalog().len();
    if n == 0 {
        return Err(PipelineError::Weights("genre catalog is empty".into()));
    }
    if d.ratings().is_empty() {
        return Err(PipelineError::Weights(
            "no ratings to count genre frequencies from".into(),
        ));
    }
    let freq = genre_frequencies(d);
    let floor = 1.0 / f64::from(scale.max_degree());
    let mut rows = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (fi, fj) = (freq[i] as f64, freq[j] as f64);
            let a_ij = match (freq[i], freq[j]) {
                (0, 0) => 1.0,
                (0, _) => floor,
                (_, 0) => 1.0 / floor,
                _ if fi >= fj => f64::from(scale.quantize(fi / fj)),
                _ => 1.0 / f64::from(scale.quantize(fj / fi)),
            };
            rows[i][j] = a_ij;
            rows[j][i] = 1.0 / a_ij;
        }
    }
    let zero_frequency: Vec<String> = d
        .genre_catalog()
        .iter()
        .zip(&freq)
        .filter(|(_, &f)| f == 0)
        .map(|(g, _)| g.clone())
        .collect();
    if !zero_frequency.is_empty() {
        log::warn!(
            "genres without ratings get the scale minimum: {}",
            zero_frequency.join(", ")
        );
    }
    let matrix = ComparisonMatrix::new(rows)?;
    let pair = principal_eigenpair(&matrix)?;
    let ci = if n <= 2 {
        0.0
    } else {
        (pair.lambda_max - n as f64) / (n as f64 - 1.0)
    };
    let consistency = consistency_with(
        &matrix,
        ConsistencyOptions {
            extended_aci: true,
            ..Default::default()
        },
    )
    .ok();
    Ok(FrequencyJudgments {
        scale,
        frequencies: freq,
        matrix,
        lambda_max: pair.lambda_max,
        ci,
        consistency,
        zero_frequency,
    })
}

/// Genre weights derived from `d`'s rating frequencies, with the diagnostics.
pub fn weights_from_frequency(
    d: &Dataset,
    scale: Scale,
) -> Result<(GenreWeights, FrequencyJudgments), PipelineError> {
    let j = genre_matrix_from_frequencies(d, scale)?;
    let pair = principal_eigenpair(&j.matrix)?;
    let w = GenreWeights::from_priorities(
        d.genre_catalog(),
        &pair.vector,
        WeightProvenance::EigenFromFrequency,
    )?;
    Ok((w, j))
}

/// How an item's genre weights combine into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenreAggregate {
    #[default]
    Mean,
    Max,
}

impl FromStr for GenreAggregate {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(GenreAggregate::Mean),
            "max" => Ok(GenreAggregate::Max),
            other => Err(PipelineError::Weights(format!(
                "unknown genre aggregate `{other}`"
            ))),
        }
    }
}

impl fmt::Display for GenreAggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenreAggregate::Mean => "mean",
            GenreAggregate::Max => "max",
        })
    }
}

/// Mean (or max) of the item's genre weights over the largest single weight,
/// in `[0, 1]`. Items without genres score 0.
pub fn genre_score(item: &Movie, w: &GenreWeights, how: GenreAggregate) -> f64 {
    let top = w.max_weight();
    let weights: Vec<f64> = item.genres.iter().filter_map(|&g| w.weight(g)).collect();
    if weights.is_empty() || top <= 0.0 {
        return 0.0;
    }
    let combined = match how {
        GenreAggregate::Mean => weights.iter().sum::<f64>() / weights.len() as f64,
        GenreAggregate::Max => weights.iter().copied().fold(0.0, f64::max),
    };
    (combined / top).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_dataset, Rating, RatingRecord, SourceTag, UserProfile};

    fn corpus(genre_counts: &[usize]) -> Dataset {
        // one single-genre item per genre, rated by `count` distinct users
        let users = genre_counts.iter().copied().max().unwrap_or(0).max(1) as u32;
        let movies = (0..genre_counts.len())
            .map(|g| Movie::new(g as u32 + 1, format!("m{g}"), [g as GenreId]))
            .collect();
        let ratings = genre_counts
            .iter()
            .enumerate()
            .flat_map(|(g, &c)| {
                (1..=c as u32)
                    .map(move |u| RatingRecord::new(u, g as u32 + 1, Rating::new(4).unwrap()))
            })
            .collect();
        make_dataset(
            (1..=users).map(UserProfile::bare).collect(),
            movies,
            ratings,
            (0..genre_counts.len()).map(|g| format!("g{g}")).collect(),
            SourceTag::Synthetic,
        )
        .unwrap()
    }

    #[test]
    fn equal_frequencies_are_uniform() {
        let (w, j) = weights_from_frequency(&corpus(&[7, 7]), Scale::Approach5).unwrap();
        assert_eq!(j.matrix.get(0, 1), 1.0);
        assert!((w.weight(0).unwrap() - 0.5).abs() < 1e-12);
        let (w, j) = weights_from_frequency(&corpus(&[3, 3, 3, 3, 3]), Scale::Saaty9).unwrap();
        assert!(w.iter().all(|(_, x)| (x - 0.2).abs() < 1e-12));
        assert!(j.consistency.unwrap().cr.abs() < 1e-9);
    }

    #[test]
    fn ratio_quantized_to_scale() {
        let j = genre_matrix_from_frequencies(&corpus(&[100, 20]), Scale::Approach5).unwrap();
        assert_eq!(j.matrix.get(0, 1), 5.0);
        assert_eq!(j.matrix.get(1, 0), 0.2);
        let j = genre_matrix_from_frequencies(&corpus(&[100, 20, 40]), Scale::Saaty9).unwrap();
        assert_eq!(j.matrix.get(0, 1), 5.0);
        assert_eq!(j.matrix.get(2, 1), 3.0);
        assert_eq!(j.matrix.get(0, 2), 3.0);
    }

    #[test]
    fn unrated_genre_gets_scale_minimum() {
        let j = genre_matrix_from_frequencies(&corpus(&[10, 0, 0]), Scale::Approach5).unwrap();
        assert_eq!(j.matrix.get(1, 0), 0.2);
        assert_eq!(j.matrix.get(1, 2), 1.0);
        assert_eq!(j.zero_frequency, vec!["g1", "g2"]);
    }

    #[test]
    fn genre_score_rule() {
        let catalog: Vec<String> = ["Romance", "Comedy", "Drama"].map(String::from).to_vec();
        let w = GenreWeights::parse_table(
            &catalog,
            "Romance\t0.5666\ncomedy 0,3100\n# c\nDrama\t0.1\n",
            "t",
        )
        .unwrap();
        assert_eq!(w.provenance, WeightProvenance::ExternalTable);
        assert!((w.raw_sum.unwrap() - 0.9766).abs() < 1e-12);
        let s = |genres: &[GenreId], how| {
            genre_score(&Movie::new(1, "x", genres.iter().copied()), &w, how)
        };
        assert_eq!(s(&[0], GenreAggregate::Mean), 1.0);
        assert_eq!(s(&[], GenreAggregate::Mean), 0.0);
        assert!((s(&[0, 1], GenreAggregate::Mean) - 0.7736).abs() < 5e-5);
        assert_eq!(s(&[0, 1], GenreAggregate::Max), 1.0);
    }

    #[test]
    fn table_errors() {
        let catalog = vec!["A".to_string(), "B".to_string()];
        assert!(GenreWeights::parse_table(&catalog, "A\tx\n", "t").is_err());
        assert!(GenreWeights::parse_table(&catalog, "A\t1\nA\t2\n", "t").is_err());
        assert!(GenreWeights::parse_table(&catalog, "A\t-1\n", "t").is_err());
        assert!(GenreWeights::parse_table(&catalog, "C\t1\n", "t").is_err());
        let w = GenreWeights::parse_table(&catalog, "A\t2\nC\t1\n", "t").unwrap();
        assert_eq!(w.weight(1), Some(0.0));
    }

    #[test]
    fn weight_source_syntax() {
        assert_eq!(
            "frequency".parse::<WeightSource>().unwrap(),
            WeightSource::default()
        );
        assert_eq!(
            "frequency:saaty9".parse::<WeightSource>().unwrap(),
            WeightSource::Frequency(Scale::Saaty9)
        );
        assert_eq!(
            "file:w.tsv".parse::<WeightSource>().unwrap().to_string(),
            "file:w.tsv"
        );
        assert!("magic".parse::<WeightSource>().is_err());
    }
}
