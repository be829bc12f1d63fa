//! Power-enhanced two-sample tests for high-dimensional means and
//! covariance matrices, their combinations, a Monte Carlo harness and a
//! feature-set batch runner.

pub mod analysis;
pub mod batch;
pub mod combine;
pub mod data;
pub mod error;
pub mod exec;
pub mod mean_test;
pub mod probdist;
pub mod simulate;
pub mod threshold;

/// Floor applied to variance estimates before taking square roots.
pub const VAR_FLOOR: f64 = 1e-300;

pub use analysis::{analyze, AnalysisReport, Method, TestOptions};
pub use data::{load_two_sample, parse_two_sample, summarize_columns, LoadOptions, TwoSampleData};
pub use error::{Error, Result};
pub use exec::Exec;
pub use threshold::Threshold;
