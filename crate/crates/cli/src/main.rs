//! `hdpe` command-line tool: `test`, `simulate` and `batch` subcommands.
//!
//! Exit status: 0 on success, 2 on invalid input or usage, 3 when the data
//! leave a variance estimate without a usable value.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hdpe::batch::{run_batch, BatchOptions, FeatureSetCollection};
use hdpe::data::GroupSource;
use hdpe::simulate::{
    independence_check, run_cell, GammaReading, Hypothesis, Innovation, ScenarioSpec, DESK_GRID, DESK_REPLICATIONS,
    FULL_N, FULL_P, FULL_REPLICATIONS,
};
use hdpe::{analyze, load_two_sample, Exec, LoadOptions, Method, TestOptions, Threshold};

use output::{Format, Header, Sink};

#[derive(Parser, Debug)]
#[command(name = "hdpe", version, about = "Power-enhanced two-sample tests for high-dimensional means and covariances")]
struct Cli {
    /// Worker threads (0 uses one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output format.
    #[arg(long = "out", value_enum, global = true, default_value_t = Format::Json)]
    format: Format,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run all seven tests on one two-sample data file.
    Test(TestArgs),
    /// Monte Carlo size and power experiments.
    Simulate(SimulateArgs),
    /// Test many feature sets of one data file with per-category BH control.
    Batch(BatchArgs),
}

#[derive(Args, Debug, Serialize)]
struct Levels {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Mean screening threshold: theory, practical or a number above 1.
    #[arg(long, default_value = "practical")]
    threshold: Threshold,

    /// Covariance screening threshold: theory, practical or a number above 1.
    #[arg(long = "threshold-cov", default_value = "practical")]
    threshold_cov: Threshold,
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    /// Delimited data file (comma or tab, header row of coordinate names).
    #[arg(long)]
    data: PathBuf,

    /// Column holding the group label of each row.
    #[arg(long = "group-col", default_value = "group", conflicts_with = "labels")]
    group_col: String,

    /// File with one group label per data row, instead of a label column.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// The two labels in sample order, e.g. `ALL,AML`. Defaults to order of
    /// first appearance.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    groups: Option<Vec<String>>,
}

impl DataArgs {
    fn load(&self) -> hdpe::Result<hdpe::TwoSampleData> {
        let groups = match &self.labels {
            Some(path) => GroupSource::LabelFile(path.clone()),
            None => GroupSource::Column(self.group_col.clone()),
        };
        let group_order = self.groups.as_ref().map(|g| [g[0].clone(), g[1].clone()]);
        load_two_sample(
            &self.data,
            &LoadOptions {
                groups,
                group_order,
                delimiter: None,
            },
        )
    }
}

#[derive(Args, Debug, Serialize)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    levels: Levels,

    /// Combine partial sums in one fixed order, independent of the worker
    /// count.
    #[arg(long = "strict-reduction")]
    strict_reduction: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InnovationArg {
    Normal,
    Gamma,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GammaReadingArg {
    /// Shape 4, scale 1/2, centred: unit variance.
    UnitVariance,
    /// Shape 4, scale 2, centred.
    Scale2,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Comma-separated scenarios (H0, Hm_dense, Hm_sparse, Hc_dense,
    /// Hc_sparse, Hb_dd, Hb_ds, Hb_sd, Hb_ss) or `all`.
    #[arg(long, value_delimiter = ',', default_value = "H0")]
    scenario: Vec<String>,

    /// Group sizes (n1 = n2 = N).
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,

    /// Dimensions.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,

    /// Replications per cell.
    #[arg(long)]
    reps: Option<usize>,

    /// Base seed; every cell uses the same seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = InnovationArg::Normal)]
    innovation: InnovationArg,

    /// Reading of the Gamma scale parameter.
    #[arg(long = "gamma-reading", value_enum, default_value_t = GammaReadingArg::UnitVariance)]
    gamma_reading: GammaReadingArg,

    /// Draw the sparse covariance perturbation once per cell instead of once
    /// per replication.
    #[arg(long = "fix-perturbation")]
    fix_perturbation: bool,

    /// Use the full grid (N in {100, 200}, p in {100, 200, 500, 800, 1000})
    /// and 5000 replications unless overridden.
    #[arg(long)]
    full: bool,

    /// Report the joint distribution of M_PE and T_PE instead of rejection
    /// rates.
    #[arg(long)]
    independence: bool,

    #[command(flatten)]
    levels: Levels,
}

impl SimulateArgs {
    fn hypotheses(&self) -> hdpe::Result<Vec<Hypothesis>> {
        if self.scenario.iter().any(|s| s.eq_ignore_ascii_case("all")) {
            return Ok(Hypothesis::ALL.to_vec());
        }
        self.scenario
            .iter()
            .map(|s| s.parse().map_err(hdpe::Error::Precondition))
            .collect()
    }

    fn grid(&self) -> Vec<(usize, usize)> {
        let default_n: &[usize] = if self.full { &FULL_N } else { &[] };
        let default_p: &[usize] = if self.full { &FULL_P } else { &[] };
        let ns = if self.n.is_empty() { default_n } else { &self.n };
        let ps = if self.p.is_empty() { default_p } else { &self.p };
        if ns.is_empty() && ps.is_empty() {
            return DESK_GRID.to_vec();
        }
        let ns = if ns.is_empty() { &[100][..] } else { ns };
        let ps = if ps.is_empty() { &[100][..] } else { ps };
        ns.iter().flat_map(|&n| ps.iter().map(move |&p| (n, p))).collect()
    }

    fn replications(&self) -> usize {
        self.reps
            .unwrap_or(if self.full { FULL_REPLICATIONS } else { DESK_REPLICATIONS })
    }

    fn specs(&self) -> hdpe::Result<Vec<ScenarioSpec>> {
        let mut specs = Vec::new();
        for h in self.hypotheses()? {
            for (n, p) in self.grid() {
                let spec = ScenarioSpec {
                    innovation: match self.innovation {
                        InnovationArg::Normal => Innovation::Normal,
                        InnovationArg::Gamma => Innovation::Gamma,
                    },
                    gamma_reading: match self.gamma_reading {
                        GammaReadingArg::UnitVariance => GammaReading::UnitVariance,
                        GammaReadingArg::Scale2 => GammaReading::Scale2,
                    },
                    replications: self.replications(),
                    alpha: self.levels.alpha,
                    seed: self.seed,
                    fix_perturbation: self.fix_perturbation,
                    mean_threshold: self.levels.threshold,
                    cov_threshold: self.levels.threshold_cov,
                    ..ScenarioSpec::new(h, n, p)
                };
                spec.validate()?;
                specs.push(spec);
            }
        }
        Ok(specs)
    }
}

#[derive(Args, Debug, Serialize)]
struct BatchArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Feature-set file: `name<TAB>category<TAB>member...` per line.
    #[arg(long)]
    sets: PathBuf,

    /// Methods to run and report.
    #[arg(long, default_value = "M,MPE,T,TPE,S,C,J")]
    methods: String,

    #[command(flatten)]
    levels: Levels,

    /// Combine partial sums in one fixed order, independent of the worker
    /// count.
    #[arg(long = "strict-reduction")]
    strict_reduction: bool,
}

fn test_options(levels: &Levels, strict: bool) -> TestOptions {
    TestOptions {
        alpha: levels.alpha,
        mean_threshold: levels.threshold,
        cov_threshold: levels.threshold_cov,
        exec: Exec::Parallel,
        strict,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let header = |name: &str, config: serde_json::Value| Header::new(name, cli.threads, config);
    let sink = Sink::new(cli.format, cli.output.clone());
    match &cli.command {
        Command::Test(args) => {
            let data = args.data.load()?;
            let report = analyze(&data, &test_options(&args.levels, args.strict_reduction))?;
            sink.test(&header("test", serde_json::to_value(args)?), &report)
        }
        Command::Simulate(args) => {
            let specs = args.specs()?;
            let mut config = serde_json::to_value(args)?;
            config["grid"] = serde_json::to_value(args.grid())?;
            config["reps"] = args.replications().into();
            if args.independence {
                let mut reports = Vec::with_capacity(specs.len());
                for spec in &specs {
                    let start = Instant::now();
                    reports.push((spec.clone(), independence_check(spec, Exec::Parallel)?));
                    log_cell(spec, start);
                }
                sink.independence(&header("simulate", config.clone()), &reports)
            } else {
                let mut cells = Vec::with_capacity(specs.len());
                for spec in &specs {
                    let start = Instant::now();
                    cells.push(run_cell(spec, Exec::Parallel)?);
                    log_cell(spec, start);
                }
                sink.cells(&header("simulate", config.clone()), &cells)
            }
        }
        Command::Batch(args) => {
            let data = args.data.load()?;
            let sets = FeatureSetCollection::load(&args.sets)?;
            let opts = BatchOptions {
                test: test_options(&args.levels, args.strict_reduction),
                methods: Method::parse_list(&args.methods).map_err(hdpe::Error::Precondition)?,
            };
            let start = Instant::now();
            let result = run_batch(&data, &sets, &opts)?;
            eprintln!("batch: {} sets in {:.3}s", result.sets.len(), start.elapsed().as_secs_f64());
            sink.batch(&header("batch", serde_json::to_value(args)?), &result)
        }
    }
}

fn log_cell(spec: &ScenarioSpec, start: Instant) {
    eprintln!(
        "{} N={} p={} reps={}: {:.3}s",
        spec.hypothesis,
        spec.n,
        spec.p,
        spec.replications,
        start.elapsed().as_secs_f64()
    );
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hdpe::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building the worker pool");
    let result = pool.and_then(|pool| pool.install(|| run(&cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
