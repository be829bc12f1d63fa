//! Seeded Monte Carlo engine for size and power experiments.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(seed, role)` with the replication index as stream number, so results
//! are reproducible and independent of how replications are scheduled.

mod generate;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use generate::{mean_vector, GammaReading, Innovation, MeanShift, SparseCovPerturbation, DENSE_THETA};
use generate::{generate_ma1, generate_sparse_cov, Sampler};

use crate::analysis::{analyze_with, Critical, Method, TestOptions};
use crate::data::TwoSampleData;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::probdist::normal_sf;
use crate::threshold::{Threshold, MIN_PRACTICAL_N};

/// Null hypothesis and the eight alternatives. For the combined
/// alternatives the first letter after `Hb_` is the mean pattern and the
/// second the covariance pattern (`d` dense, `s` sparse).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    HmDense,
    HmSparse,
    HcDense,
    HcSparse,
    HbDd,
    HbDs,
    HbSd,
    HbSs,
}

/// Covariance difference pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovShift {
    None,
    /// Second group MA(1) with coefficient [`DENSE_THETA`].
    Dense,
    /// [`SparseCovPerturbation`].
    Sparse,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 9] = [
        Hypothesis::H0,
        Hypothesis::HmDense,
        Hypothesis::HmSparse,
        Hypothesis::HcDense,
        Hypothesis::HcSparse,
        Hypothesis::HbDd,
        Hypothesis::HbDs,
        Hypothesis::HbSd,
        Hypothesis::HbSs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::HmDense => "Hm_dense",
            Hypothesis::HmSparse => "Hm_sparse",
            Hypothesis::HcDense => "Hc_dense",
            Hypothesis::HcSparse => "Hc_sparse",
            Hypothesis::HbDd => "Hb_dd",
            Hypothesis::HbDs => "Hb_ds",
            Hypothesis::HbSd => "Hb_sd",
            Hypothesis::HbSs => "Hb_ss",
        }
    }

    pub fn shifts(self) -> (MeanShift, CovShift) {
        use CovShift as C;
        use MeanShift as M;
        match self {
            Hypothesis::H0 => (M::None, C::None),
            Hypothesis::HmDense => (M::Dense, C::None),
            Hypothesis::HmSparse => (M::Sparse, C::None),
            Hypothesis::HcDense => (M::None, C::Dense),
            Hypothesis::HcSparse => (M::None, C::Sparse),
            Hypothesis::HbDd => (M::Dense, C::Dense),
            Hypothesis::HbDs => (M::Dense, C::Sparse),
            Hypothesis::HbSd => (M::Sparse, C::Dense),
            Hypothesis::HbSs => (M::Sparse, C::Sparse),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = Hypothesis::ALL.iter().map(|h| h.name()).collect();
                format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
            })
    }
}

impl serde::Serialize for Hypothesis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// One simulation cell with `n1 = n2 = n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioSpec {
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub p: usize,
    pub innovation: Innovation,
    pub gamma_reading: GammaReading,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Draw the sparse perturbation once per cell instead of once per
    /// replication.
    pub fix_perturbation: bool,
    pub mean_threshold: Threshold,
    pub cov_threshold: Threshold,
}

impl ScenarioSpec {
    pub fn new(hypothesis: Hypothesis, n: usize, p: usize) -> Self {
        Self {
            hypothesis,
            n,
            p,
            innovation: Innovation::Normal,
            gamma_reading: GammaReading::UnitVariance,
            replications: 1000,
            alpha: 0.05,
            seed: 0,
            fix_perturbation: false,
            mean_threshold: Threshold::Practical,
            cov_threshold: Threshold::Practical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_PRACTICAL_N {
            return Err(Error::Precondition(format!(
                "group size must be at least {MIN_PRACTICAL_N}, got {}",
                self.n
            )));
        }
        if self.p < 2 {
            return Err(Error::Precondition(format!("p must be at least 2, got {}", self.p)));
        }
        if self.replications == 0 {
            return Err(Error::Precondition("at least one replication is required".into()));
        }
        if self.hypothesis.shifts().1 == CovShift::Sparse && self.p < 4 {
            return Err(Error::Precondition("sparse covariance alternatives need p >= 4".into()));
        }
        Critical::new(self.alpha).map(|_| ())
    }

    fn test_options(&self) -> TestOptions {
        TestOptions {
            alpha: self.alpha,
            mean_threshold: self.mean_threshold,
            cov_threshold: self.cov_threshold,
            exec: Exec::Sequential,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Role {
    Innovations = 1,
    Perturbation = 2,
}

fn stream(seed: u64, role: Role, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(role as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"hdpe-sim");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Sparse perturbation used by replication `rep`.
pub fn perturbation(spec: &ScenarioSpec, rep: usize) -> Result<SparseCovPerturbation> {
    let index = if spec.fix_perturbation { 0 } else { rep as u64 };
    SparseCovPerturbation::draw(spec.p, &mut stream(spec.seed, Role::Perturbation, index))
}

/// Data of replication `rep`.
pub fn generate(spec: &ScenarioSpec, rep: usize) -> Result<TwoSampleData> {
    let (mean, cov) = spec.hypothesis.shifts();
    let mu1 = vec![0.0; spec.p];
    let mu2 = mean_vector(mean, spec.p);
    let sampler = Sampler::new(spec.innovation, spec.gamma_reading);
    let mut rng = stream(spec.seed, Role::Innovations, rep as u64);
    match cov {
        CovShift::None => generate_ma1(spec.n, spec.n, &mu1, &mu2, 0.0, 0.0, &sampler, &mut rng),
        CovShift::Dense => generate_ma1(spec.n, spec.n, &mu1, &mu2, 0.0, DENSE_THETA, &sampler, &mut rng),
        CovShift::Sparse => {
            let pert = perturbation(spec, rep)?;
            generate_sparse_cov(spec.n, spec.n, &mu1, &mu2, &pert, &sampler, &mut rng)
        }
    }
}

/// What one replication contributes to a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    /// Rejections in [`Method::ALL`] order.
    pub reject: [bool; 7],
    pub mean_active: bool,
    pub cov_active: bool,
    pub m_pe: f64,
    pub t_pe: f64,
}

pub fn replicate(spec: &ScenarioSpec, rep: usize, critical: &Critical) -> Result<RepOutcome> {
    let data = generate(spec, rep)?;
    let r = analyze_with(&data, &spec.test_options(), critical)?;
    Ok(RepOutcome {
        reject: r.rejections(),
        mean_active: r.mean.j_m != 0.0,
        cov_active: r.cov.j_c != 0.0,
        m_pe: r.mean.m_pe,
        t_pe: r.cov.t_pe,
    })
}

/// All replications of a cell, in replication order. Replications are
/// spread over `exec`; each one runs sequentially.
pub fn run_replications(spec: &ScenarioSpec, exec: Exec) -> Result<Vec<RepOutcome>> {
    spec.validate()?;
    let critical = Critical::new(spec.alpha)?;
    exec.map(spec.replications, |rep| replicate(spec, rep, &critical))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MethodRate {
    pub method: Method,
    pub rejections: usize,
    pub frequency: f64,
    /// `sqrt(f (1 - f) / reps)`.
    pub se: f64,
}

impl MethodRate {
    fn new(method: Method, rejections: usize, reps: usize) -> Self {
        let f = rejections as f64 / reps as f64;
        Self {
            method,
            rejections,
            frequency: f,
            se: (f * (1.0 - f) / reps as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellResult {
    pub spec: ScenarioSpec,
    pub rates: Vec<MethodRate>,
    /// Fraction of replications with `J_m != 0`.
    pub mean_pe_active: f64,
    /// Fraction of replications with `J_c != 0`.
    pub cov_pe_active: f64,
    /// Excluded from serialized output so repeated runs are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CellResult {
    pub fn from_outcomes(spec: &ScenarioSpec, outcomes: &[RepOutcome], wall_time: Duration) -> Self {
        let reps = outcomes.len();
        let count = |f: &dyn Fn(&RepOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
        let rates = Method::ALL
            .iter()
            .map(|&m| MethodRate::new(m, count(&|o| o.reject[m.index()]), reps))
            .collect();
        Self {
            spec: spec.clone(),
            rates,
            mean_pe_active: count(&|o| o.mean_active) as f64 / reps as f64,
            cov_pe_active: count(&|o| o.cov_active) as f64 / reps as f64,
            wall_time,
        }
    }

    pub fn rate(&self, m: Method) -> &MethodRate {
        &self.rates[m.index()]
    }
}

pub fn run_cell(spec: &ScenarioSpec, exec: Exec) -> Result<CellResult> {
    let start = Instant::now();
    let outcomes = run_replications(spec, exec)?;
    Ok(CellResult::from_outcomes(spec, &outcomes, start.elapsed()))
}

/// Joint lower-tail frequency at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    /// Fraction of replications with `M_PE <= x1` and `T_PE <= x2`.
    pub joint: f64,
    /// `Phi(x1) Phi(x2)`.
    pub expected: f64,
    /// Binomial standard error at `expected`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IndependenceReport {
    pub replications: usize,
    pub correlation: f64,
    pub grid: Vec<GridPoint>,
    pub m_pe_rejection: f64,
    pub t_pe_rejection: f64,
}

pub const INDEPENDENCE_GRID: [f64; 3] = [-1.0, 0.0, 1.0];

/// Empirical check that `M_PE` and `T_PE` are independent, from outcomes
/// simulated under the null.
pub fn independence_from(outcomes: &[RepOutcome]) -> IndependenceReport {
    let n = outcomes.len() as f64;
    let m: Vec<f64> = outcomes.iter().map(|o| o.m_pe).collect();
    let t: Vec<f64> = outcomes.iter().map(|o| o.t_pe).collect();
    let mut grid = Vec::new();
    for &x1 in &INDEPENDENCE_GRID {
        for &x2 in &INDEPENDENCE_GRID {
            let hits = m.iter().zip(&t).filter(|(&a, &b)| a <= x1 && b <= x2).count();
            let expected = normal_sf(-x1) * normal_sf(-x2);
            grid.push(GridPoint {
                x1,
                x2,
                joint: hits as f64 / n,
                expected,
                se: (expected * (1.0 - expected) / n).sqrt(),
            });
        }
    }
    let frac = |k: usize| outcomes.iter().filter(|o| o.reject[k]).count() as f64 / n;
    IndependenceReport {
        replications: outcomes.len(),
        correlation: pearson(&m, &t),
        grid,
        m_pe_rejection: frac(Method::MPe.index()),
        t_pe_rejection: frac(Method::TPe.index()),
    }
}

pub fn independence_check(spec: &ScenarioSpec, exec: Exec) -> Result<IndependenceReport> {
    if spec.hypothesis != Hypothesis::H0 {
        return Err(Error::Precondition(format!(
            "independence check runs under H0, got {}",
            spec.hypothesis
        )));
    }
    Ok(independence_from(&run_replications(spec, exec)?))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Desk-scale grid of `(N, p)` cells.
pub const DESK_GRID: [(usize, usize); 6] = [(100, 100), (100, 200), (100, 500), (200, 100), (200, 200), (200, 500)];
pub const DESK_REPLICATIONS: usize = 1000;
pub const FULL_REPLICATIONS: usize = 5000;
pub const FULL_N: [usize; 2] = [100, 200];
pub const FULL_P: [usize; 5] = [100, 200, 500, 800, 1000];
