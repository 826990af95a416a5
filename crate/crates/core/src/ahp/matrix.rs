use std::fmt::Write as _;

use serde::Serialize;

use super::AhpError;

/// Relative tolerance on `a_ij * a_ji = 1`.
pub const RECIPROCITY_TOLERANCE: f64 = 1e-9;

/// A validated reciprocal pairwise-comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ComparisonMatrix {
    /// Validates diagonal, positivity and reciprocity.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let n = rows.len();
        if n == 0 {
            return Err(AhpError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(AhpError::NotSquare {
                    row,
                    len: r.len(),
                    n,
                });
            }
            entries.extend(r);
        }
        let m = ComparisonMatrix { n, entries };
        m.validate()?;
        Ok(m)
    }

    /// Fills a reciprocal matrix from its strict upper triangle, row by row.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self, AhpError> {
        if n == 0 {
            return Err(AhpError::Empty);
        }
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(AhpError::Parse(format!(
                "upper triangle of order {n} needs {expected} entries, got {}",
                upper.len()
            )));
        }
        let mut rows = vec![vec![1.0; n]; n];
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        for ((i, j), &a) in pairs.zip(upper) {
            rows[i][j] = a;
            rows[j][i] = 1.0 / a;
        }
        Self::new(rows)
    }

    /// The perfectly consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(w: &[f64]) -> Result<Self, AhpError> {
        if let Some((index, &value)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(AhpError::NonPositiveMeasurement { index, value });
        }
        let rows = w
            .iter()
            .map(|wi| {
                w.iter()
                    .map(|wj| if wi == wj { 1.0 } else { wi / wj })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `b_ij = 1 / a_ji`. Unvalidated: this is the input to a validation check.
    pub fn transpose_reciprocal_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = rows.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        1.0 / rows
                            .get(j)
                            .and_then(|r| r.get(i))
                            .copied()
                            .unwrap_or(f64::NAN)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn validate(&self) -> Result<(), AhpError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let value = self.get(i, j);
                if !(value > 0.0 && value.is_finite()) {
                    return Err(AhpError::NonPositive { i, j, value });
                }
            }
        }
        for i in 0..n {
            let value = self.get(i, i);
            if (value - 1.0).abs() > RECIPROCITY_TOLERANCE {
                return Err(AhpError::Diagonal { i, value });
            }
            for j in (i + 1)..n {
                let (a_ij, a_ji) = (self.get(i, j), self.get(j, i));
                if (a_ij * a_ji - 1.0).abs() > RECIPROCITY_TOLERANCE {
                    return Err(AhpError::NotReciprocal { i, j, a_ij, a_ji });
                }
            }
        }
        Ok(())
    }

    /// Parses the judgment-file format: first line `n`, then `n` rows of `n`
    /// whitespace- or comma-separated entries. Entries may be integers,
    /// decimals or `p/q` fractions. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, AhpError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| AhpError::Parse("empty file".into()))?;
        let n: usize = header.parse().map_err(|_| {
            AhpError::Parse(format!("first line must be the order n, got `{header}`"))
        })?;
        let mut rows = Vec::with_capacity(n);
        for row in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| AhpError::Parse(format!("expected {n} rows, found {row}")))?;
            let entries = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(parse_entry)
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(entries);
        }
        if let Some(extra) = lines.next() {
            return Err(AhpError::Parse(format!(
                "unexpected trailing line `{extra}`"
            )));
        }
        Self::new(rows)
    }

    /// Inverse of [`ComparisonMatrix::parse`]. Entries that are integers or
    /// integer reciprocals are written as `k` / `1/k`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let cells: Vec<String> = self.row(i).iter().map(|&v| format_entry(v)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

pub(crate) fn parse_entry(token: &str) -> Result<f64, AhpError> {
    let bad = || AhpError::Parse(format!("bad entry `{token}`"));
    match token.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => token.parse().map_err(|_| bad()),
    }
}

fn format_entry(v: f64) -> String {
    let near_int = |x: f64| (x - x.round()).abs() < 1e-12 && x.round() >= 1.0;
    if near_int(v) {
        format!("{}", v.round() as i64)
    } else if near_int(1.0 / v) {
        format!("1/{}", (1.0 / v).round() as i64)
    } else {
        format!("{v}")
    }
}

/// Normalized nonnegative weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorityVector {
    weights: Vec<f64>,
}

impl PriorityVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    /// Scales a nonnegative vector with positive sum to unit sum.
    pub fn normalized(raw: Vec<f64>) -> Option<Self> {
        if raw.is_empty() || raw.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return None;
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return None;
        }
        Some(PriorityVector {
            weights: raw.into_iter().map(|v| v / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        PriorityVector {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices sorted by descending weight; ties keep element order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        idx
    }
}

/// Divides each measurement by the total.
pub fn normalize_measurements(raw: &[f64]) -> Result<PriorityVector, AhpError> {
    if raw.is_empty() {
        return Err(AhpError::Empty);
    }
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(AhpError::NonPositiveMeasurement { index, value });
    }
    Ok(PriorityVector::normalized(raw.to_vec()).expect("positive entries"))
}
