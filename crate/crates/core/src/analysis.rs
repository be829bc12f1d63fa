//! All seven tests on one dataset from a single pass over coordinate pairs.

use std::fmt;
use std::str::FromStr;

use crate::combine::{CombinationQuantiles, CombinedReport};
use crate::cov_test::{scan_pairs, CovTestReport};
use crate::data::TwoSampleData;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mean_test::{mean_test_with_traces, MeanOptions, MeanTestReport};
use crate::probdist::normal_upper_quantile;
use crate::threshold::Threshold;

/// The seven tests, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    M,
    MPe,
    T,
    TPe,
    S,
    C,
    J,
}

impl Method {
    pub const ALL: [Method; 7] = [Method::M, Method::MPe, Method::T, Method::TPe, Method::S, Method::C, Method::J];

    pub fn name(self) -> &'static str {
        match self {
            Method::M => "M",
            Method::MPe => "MPE",
            Method::T => "T",
            Method::TPe => "TPE",
            Method::S => "S",
            Method::C => "C",
            Method::J => "J",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parses a comma-separated list such as `M,TPE,J`.
    pub fn parse_list(s: &str) -> std::result::Result<Vec<Method>, String> {
        let mut out: Vec<Method> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err("empty method list".into());
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase().replace('_', "");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == t)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of M, MPE, T, TPE, S, C, J)"))
    }
}

impl serde::Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    pub alpha: f64,
    pub mean_threshold: Threshold,
    pub cov_threshold: Threshold,
    pub exec: Exec,
    /// Fixed-order reduction of pair partial sums.
    pub strict: bool,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            mean_threshold: Threshold::Practical,
            cov_threshold: Threshold::Practical,
            exec: Exec::Parallel,
            strict: false,
        }
    }
}

/// Cut-offs for all seven tests at one level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Critical {
    /// Upper-alpha standard normal quantile, shared by M, M_PE, T and T_PE.
    pub z_alpha: f64,
    #[serde(flatten)]
    pub combined: CombinationQuantiles,
}

impl Critical {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Precondition(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self {
            z_alpha: normal_upper_quantile(alpha)?,
            combined: CombinationQuantiles::new(alpha)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Decision {
    pub method: Method,
    pub stat: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AnalysisReport {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub mean: MeanTestReport,
    pub cov: CovTestReport,
    pub combined: CombinedReport,
    pub critical: Critical,
    pub decisions: Vec<Decision>,
}

impl AnalysisReport {
    pub fn decision(&self, m: Method) -> &Decision {
        &self.decisions[m.index()]
    }

    pub fn rejections(&self) -> [bool; 7] {
        std::array::from_fn(|k| self.decisions[k].reject)
    }
}

pub fn analyze(data: &TwoSampleData, opts: &TestOptions) -> Result<AnalysisReport> {
    let critical = Critical::new(opts.alpha)?;
    analyze_with(data, opts, &critical)
}

/// [`analyze`] with the cut-offs computed once by the caller.
pub fn analyze_with(data: &TwoSampleData, opts: &TestOptions, critical: &Critical) -> Result<AnalysisReport> {
    let (n1, n2, p) = (data.n1(), data.n2(), data.p());
    let eta = opts.cov_threshold.for_cov(p, n1 + n2)?;
    let scan = scan_pairs(data, Some(eta), opts.exec, opts.strict);
    let mean = mean_test_with_traces(
        data,
        &scan.traces,
        &MeanOptions {
            threshold: opts.mean_threshold,
            exec: opts.exec,
        },
    )?;
    let cov = CovTestReport::from_scan(&scan, n1, n2, eta)?;
    let combined = CombinedReport::from_statistics(mean.m_pe, cov.t_pe, critical.combined);
    let z = critical.z_alpha;
    let decisions = vec![
        Decision {
            method: Method::M,
            stat: mean.m_standardized,
            p_value: mean.p_value_unenhanced,
            reject: mean.m_standardized >= z,
        },
        Decision {
            method: Method::MPe,
            stat: mean.m_pe,
            p_value: mean.p_value,
            reject: mean.m_pe >= z,
        },
        Decision {
            method: Method::T,
            stat: cov.t_standardized,
            p_value: cov.p_value_unenhanced,
            reject: cov.t_standardized >= z,
        },
        Decision {
            method: Method::TPe,
            stat: cov.t_pe,
            p_value: cov.p_value,
            reject: cov.t_pe >= z,
        },
        Decision {
            method: Method::S,
            stat: combined.s_stat,
            p_value: combined.s_p_value,
            reject: combined.s_reject,
        },
        Decision {
            method: Method::C,
            stat: combined.c_stat,
            p_value: combined.c_p_value,
            reject: combined.c_reject,
        },
        Decision {
            method: Method::J,
            stat: combined.j_stat,
            p_value: combined.j_p_value,
            reject: combined.j_reject,
        },
    ];
    Ok(AnalysisReport {
        n1,
        n2,
        p,
        mean,
        cov,
        combined,
        critical: *critical,
        decisions,
    })
}
