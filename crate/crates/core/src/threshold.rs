use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Screening threshold for the power-enhancement components.
///
/// For the mean component the threshold is `2 ln p` (theory) or
/// `2 ln p ln ln n` (practical); the covariance component doubles the
/// leading constant to `4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    Theory,
    #[default]
    Practical,
    Explicit(f64),
}

/// Smallest pooled sample size for which the practical threshold is used.
pub const MIN_PRACTICAL_N: usize = 16;

impl Threshold {
    fn resolve(self, scale: f64, p: usize, n: usize) -> Result<f64> {
        match self {
            Threshold::Explicit(v) if v.is_finite() && v > 1.0 => Ok(v),
            Threshold::Explicit(v) => Err(Error::Precondition(format!(
                "explicit screening threshold must be finite and > 1, got {v}"
            ))),
            _ if p < 2 => Err(Error::Precondition(format!(
                "log-scaled screening thresholds need p >= 2, got p = {p}"
            ))),
            Threshold::Theory => Ok(scale * (p as f64).ln()),
            Threshold::Practical => {
                if n < MIN_PRACTICAL_N {
                    return Err(Error::Precondition(format!(
                        "practical threshold needs n1 + n2 >= {MIN_PRACTICAL_N}, got {n}"
                    )));
                }
                Ok(scale * (p as f64).ln() * (n as f64).ln().ln())
            }
        }
    }

    /// `delta` for the mean component.
    pub fn for_mean(self, p: usize, n: usize) -> Result<f64> {
        self.resolve(2.0, p, n)
    }

    /// `eta` for the covariance component.
    pub fn for_cov(self, p: usize, n: usize) -> Result<f64> {
        self.resolve(4.0, p, n)
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(Threshold::Theory),
            "practical" => Ok(Threshold::Practical),
            other => other
                .parse::<f64>()
                .map(Threshold::Explicit)
                .map_err(|_| format!("expected `theory`, `practical` or a number, got `{s}`")),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Theory => f.write_str("theory"),
            Threshold::Practical => f.write_str("practical"),
            Threshold::Explicit(v) => write!(f, "{v}"),
        }
    }
}

impl serde::Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
