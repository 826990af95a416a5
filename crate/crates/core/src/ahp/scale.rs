use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::AhpError;

/// Judgment intensity scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Saaty's 1..9 scale; 2, 4, 6, 8 are intermediate values.
    Saaty9,
    /// The compressed 1..5 scale (equal, moderate, strong, very strong, extreme).
    Approach5,
}

impl Scale {
    pub fn max_degree(self) -> u8 {
        match self {
            Scale::Saaty9 => 9,
            Scale::Approach5 => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Saaty9 => "saaty9",
            Scale::Approach5 => "approach5",
        }
    }

    pub fn describe(self, degree: u8) -> Option<&'static str> {
        match (self, degree) {
            (Scale::Saaty9, 1) => Some("equal importance"),
            (Scale::Saaty9, 3) => Some("weak importance"),
            (Scale::Saaty9, 5) => Some("strong importance"),
            (Scale::Saaty9, 7) => Some("demonstrated importance"),
            (Scale::Saaty9, 9) => Some("absolute importance"),
            (Scale::Saaty9, 2 | 4 | 6 | 8) => Some("intermediate value"),
            (Scale::Approach5, 1) => Some("equal importance"),
            (Scale::Approach5, 2) => Some("moderate importance"),
            (Scale::Approach5, 3) => Some("strong importance"),
            (Scale::Approach5, 4) => Some("very strong importance"),
            (Scale::Approach5, 5) => Some("extreme importance"),
            _ => None,
        }
    }

    /// Maps a ratio `r >= 1` onto a degree of this scale: nearest integer
    /// capped at 5 on `approach5`, nearest odd degree capped at 9 on `saaty9`.
    pub fn quantize(self, ratio: f64) -> u8 {
        let capped = ratio.clamp(1.0, f64::from(self.max_degree()));
        match self {
            Scale::Approach5 => capped.round() as u8,
            Scale::Saaty9 => (2.0 * ((capped - 1.0) / 2.0).round() + 1.0) as u8,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "saaty9" | "saaty" | "9" => Ok(Scale::Saaty9),
            "approach5" | "5" => Ok(Scale::Approach5),
            other => Err(format!(
                "unknown scale `{other}` (expected saaty9 or approach5)"
            )),
        }
    }
}

/// The matrix entry for a judgment of `degree`; its mirror cell holds `1/degree`.
pub fn judgment_from_scale(degree: i64, scale: Scale) -> Result<f64, AhpError> {
    if degree >= 1 && degree <= i64::from(scale.max_degree()) {
        Ok(degree as f64)
    } else {
        Err(AhpError::DegreeOutOfRange {
            degree,
            scale: scale.name(),
        })
    }
}
