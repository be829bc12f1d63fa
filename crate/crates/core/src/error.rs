use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}, column `{column}`: non-finite value `{value}`")]
    NonFinite {
        line: u64,
        column: String,
        value: String,
    },

    #[error("group `{group}` has {size} observations, at least {min} are required")]
    GroupSize {
        group: String,
        size: usize,
        min: usize,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("feature set `{set}`: {reason}")]
    FeatureSet { set: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("probability {0} is outside [0, 1]")]
    Domain(f64),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Calibration(_))
    }
}
