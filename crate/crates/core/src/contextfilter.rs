//! Contextual pre-filtering: keep only the ratings given in a target context.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{ContextDim, Dataset, ModelError, RatingRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("malformed constraint `{0}`, expected dimension=value")]
    Syntax(String),
    #[error("dimension {0} constrained twice")]
    Repeated(ContextDim),
    #[error("{dim}: unknown value `{value}`")]
    UnknownValue { dim: ContextDim, value: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How a constrained dimension treats a rating whose value is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchPolicy {
    /// Missing fails the constraint.
    #[default]
    Strict,
    /// Missing passes the constraint.
    Permissive,
}

impl FromStr for MatchPolicy {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(MatchPolicy::Strict),
            "permissive" => Ok(MatchPolicy::Permissive),
            other => Err(QueryError::Syntax(format!("policy {other}"))),
        }
    }
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchPolicy::Strict => "strict",
            MatchPolicy::Permissive => "permissive",
        })
    }
}

/// Exact-value constraints over the twelve context dimensions.
///
/// Parses from `"time=3,mood=1"`. Values may be codes or, case-insensitively,
/// the code labels (`"daytype=weekend"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ContextQuery {
    constraints: [Option<u8>; 12],
    pub policy: MatchPolicy,
}

impl ContextQuery {
    /// Matches every record that carries a context.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_policy(mut self, policy: MatchPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Adds or replaces the constraint on `dim`.
    pub fn constrain(mut self, dim: ContextDim, code: u8) -> Result<Self, QueryError> {
        dim.check(i64::from(code))?;
        self.constraints[dim.index()] = Some(code);
        Ok(self)
    }

    pub fn constraint(&self, dim: ContextDim) -> Option<u8> {
        self.constraints[dim.index()]
    }

    pub fn constraints(&self) -> impl Iterator<Item = (ContextDim, u8)> + '_ {
        ContextDim::ALL
            .into_iter()
            .filter_map(|d| self.constraint(d).map(|c| (d, c)))
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.iter().all(Option::is_none)
    }

    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let mut q = ContextQuery::empty();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| QueryError::Syntax(part.to_string()))?;
            let dim = ContextDim::from_name(name)?;
            if q.constraint(dim).is_some() {
                return Err(QueryError::Repeated(dim));
            }
            let value = value.trim();
            let code = match value.parse::<i64>() {
                Ok(raw) => match dim.check(raw)? {
                    Some(c) => c,
                    None => {
                        return Err(QueryError::Syntax(format!(
                            "{part} (missing marker is not a value)"
                        )))
                    }
                },
                Err(_) => dim
                    .labels()
                    .iter()
                    .position(|l| l.eq_ignore_ascii_case(value))
                    .map(|p| p as u8 + 1)
                    .ok_or_else(|| QueryError::UnknownValue {
                        dim,
                        value: value.to_string(),
                    })?,
            };
            q = q.constrain(dim, code)?;
        }
        Ok(q)
    }

    pub fn matches(&self, r: &RatingRecord) -> bool {
        matches(r, self)
    }
}

impl FromStr for ContextQuery {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Canonical `dimension=code` form in dimension order; empty for the empty query.
impl fmt::Display for ContextQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .constraints()
            .map(|(d, c)| format!("{}={c}", d.name()))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for ContextQuery {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Whether `r` was given in the context `q` describes. A record without any
/// context (MovieLens) only matches the empty query.
pub fn matches(r: &RatingRecord, q: &ContextQuery) -> bool {
    if q.is_empty() {
        return true;
    }
    let Some(ctx) = &r.context else {
        return false;
    };
    q.constraints().all(|(dim, want)| match ctx.get(dim) {
        Some(have) => have == want,
        None => q.policy == MatchPolicy::Permissive,
    })
}

/// The sub-corpus of ratings matching `q`. Catalogs are kept whole, so users
/// and items without surviving ratings become inactive rather than vanish.
pub fn prefilter(d: &Dataset, q: &ContextQuery) -> Dataset {
    if q.is_empty() {
        return d.clone();
    }
    let out = d.retain_ratings(|r| matches(r, q));
    if out.ratings().is_empty() && !d.ratings().is_empty() {
        log::warn!(
            "context `{q}` matches none of {} ratings",
            d.ratings().len()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_dataset, ContextVector, Movie, Rating, SourceTag, UserProfile};

    fn rec(user: u32, item: u32, ctx: Option<[i64; 12]>) -> RatingRecord {
        let r = RatingRecord::new(user, item, Rating::new(3).unwrap());
        match ctx {
            Some(c) => r.with_context(ContextVector::from_codes(c).unwrap()),
            None => r,
        }
    }

    fn codes(time: i64, daytype: i64, weather: i64) -> [i64; 12] {
        let mut c = [-1; 12];
        c[ContextDim::Time.index()] = time;
        c[ContextDim::Daytype.index()] = daytype;
        c[ContextDim::Weather.index()] = weather;
        c
    }

    #[test]
    fn parse_and_display() {
        let q = ContextQuery::parse("time=3, mood=1").unwrap();
        assert_eq!(q.constraint(ContextDim::Time), Some(3));
        assert_eq!(q.constraint(ContextDim::Mood), Some(1));
        assert_eq!(q.to_string(), "time=3,mood=1");
        assert_eq!(
            ContextQuery::parse("endEmo=2,dominantemo=happy")
                .unwrap()
                .to_string(),
            "endEmo=2,dominantEmo=2"
        );
        assert_eq!(
            ContextQuery::parse("daytype=Weekend")
                .unwrap()
                .constraint(ContextDim::Daytype),
            Some(2)
        );
        assert!(ContextQuery::parse("").unwrap().is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            ContextQuery::parse("time"),
            Err(QueryError::Syntax(_))
        ));
        assert!(matches!(
            ContextQuery::parse("time=5"),
            Err(QueryError::Model(_))
        ));
        assert!(matches!(
            ContextQuery::parse("time=-1"),
            Err(QueryError::Syntax(_))
        ));
        assert!(matches!(
            ContextQuery::parse("colour=1"),
            Err(QueryError::Model(_))
        ));
        assert!(matches!(
            ContextQuery::parse("time=1,time=2"),
            Err(QueryError::Repeated(ContextDim::Time))
        ));
        assert!(matches!(
            ContextQuery::parse("mood=cheerful"),
            Err(QueryError::UnknownValue { .. })
        ));
    }

    #[test]
    fn match_semantics() {
        let r = rec(1, 1, Some(codes(2, 1, -1)));
        assert!(matches(&r, &ContextQuery::empty()));
        assert!(!matches(&r, &ContextQuery::parse("time=1").unwrap()));
        assert!(matches(&r, &ContextQuery::parse("time=2").unwrap()));
        let weather = ContextQuery::parse("weather=3").unwrap();
        assert!(!matches(&r, &weather));
        assert!(matches(&r, &weather.with_policy(MatchPolicy::Permissive)));
        let bare = rec(1, 1, None);
        assert!(matches(&bare, &ContextQuery::empty()));
        assert!(!matches(
            &bare,
            &weather.with_policy(MatchPolicy::Permissive)
        ));
    }

    #[test]
    fn prefilter_keeps_weekend_ratings_and_catalogs() {
        let ratings = vec![
            rec(1, 1, Some(codes(1, 1, 1))),
            rec(1, 2, Some(codes(2, 2, 1))),
            rec(2, 1, Some(codes(3, 1, 2))),
            rec(2, 3, Some(codes(1, 2, -1))),
            rec(3, 2, Some(codes(4, 3, 1))),
            rec(3, 3, Some(codes(1, -1, 1))),
        ];
        let d = make_dataset(
            (1..=3).map(UserProfile::bare).collect(),
            (1..=3)
                .map(|i| Movie::new(i, format!("m{i}"), []))
                .collect(),
            ratings,
            vec![],
            SourceTag::Comoda,
        )
        .unwrap();
        let f = prefilter(&d, &ContextQuery::parse("daytype=2").unwrap());
        assert_eq!(f.ratings().len(), 2);
        assert_eq!(f.counts().0, 3);
        assert_eq!(f.inactive_users(), vec![3]);
        assert_eq!(prefilter(&d, &ContextQuery::empty()), d);
        assert!(
            prefilter(&d, &ContextQuery::parse("time=4,daytype=1").unwrap())
                .ratings()
                .is_empty()
        );
    }

    #[test]
    fn serializes_as_text() {
        let q = ContextQuery::parse("mood=1,time=3").unwrap();
        assert_eq!(serde_json::to_string(&q).unwrap(), "\"time=3,mood=1\"");
    }
}
