//! JSON and CSV emitters. Every artifact starts with the tool version and the
//! resolved configuration. Wall time goes to stderr only, so identical runs
//! produce identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use hdpe::batch::BatchResult;
use hdpe::simulate::{CellResult, IndependenceReport, ScenarioSpec};
use hdpe::AnalysisReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
pub struct Header {
    tool: &'static str,
    version: &'static str,
    subcommand: String,
    threads: usize,
    config: serde_json::Value,
}

impl Header {
    pub fn new(subcommand: &str, threads: usize, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_owned(),
            threads,
            config,
        }
    }

    fn csv_preamble(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "# {} {} {}", self.tool, self.version, self.subcommand)?;
        writeln!(out, "# threads {}", self.threads)?;
        writeln!(out, "# config {}", self.config)
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    #[serde(flatten)]
    header: &'a Header,
    #[serde(flatten)]
    body: T,
}

/// Seventeen significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Sink {
    format: Format,
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(format: Format, path: Option<PathBuf>) -> Self {
        Self { format, path }
    }

    fn emit(&self, header: &Header, body: impl Serialize, csv: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        let mut out: Box<dyn Write> = match &self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &Document { header, body })?;
                writeln!(out)?;
            }
            Format::Csv => {
                header.csv_preamble(&mut out)?;
                csv(&mut out)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn test(&self, header: &Header, report: &AnalysisReport) -> Result<()> {
        #[derive(Serialize)]
        struct Body<'a> {
            report: &'a AnalysisReport,
        }
        self.emit(header, Body { report }, |out| {
            writeln!(out, "method,stat,p_value,reject")?;
            for d in &report.decisions {
                writeln!(out, "{},{},{},{}", d.method, num(d.stat), num(d.p_value), d.reject)?;
            }
            Ok(())
        })
    }

    pub fn cells(&self, header: &Header, cells: &[CellResult]) -> Result<()> {
        #[derive(Serialize)]
        struct Body<'a> {
            cells: &'a [CellResult],
        }
        self.emit(header, Body { cells }, |out| {
            writeln!(
                out,
                "scenario,N,p,innovation,replications,method,rejections,frequency,se,j_m_active,j_c_active"
            )?;
            for c in cells {
                let s = &c.spec;
                for r in &c.rates {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        s.hypothesis,
                        s.n,
                        s.p,
                        innovation(s),
                        s.replications,
                        r.method,
                        r.rejections,
                        num(r.frequency),
                        num(r.se),
                        num(c.mean_pe_active),
                        num(c.cov_pe_active)
                    )?;
                }
            }
            Ok(())
        })
    }

    pub fn independence(&self, header: &Header, reports: &[(ScenarioSpec, IndependenceReport)]) -> Result<()> {
        #[derive(Serialize)]
        struct Cell<'a> {
            spec: &'a ScenarioSpec,
            independence: &'a IndependenceReport,
        }
        #[derive(Serialize)]
        struct Body<'a> {
            cells: Vec<Cell<'a>>,
        }
        let cells = reports
            .iter()
            .map(|(spec, independence)| Cell { spec, independence })
            .collect();
        self.emit(header, Body { cells }, |out| {
            writeln!(out, "scenario,N,p,innovation,replications,correlation,x1,x2,joint,expected,se")?;
            for (s, r) in reports {
                for g in &r.grid {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        s.hypothesis,
                        s.n,
                        s.p,
                        innovation(s),
                        r.replications,
                        num(r.correlation),
                        num(g.x1),
                        num(g.x2),
                        num(g.joint),
                        num(g.expected),
                        num(g.se)
                    )?;
                }
            }
            Ok(())
        })
    }

    /// CSV layout: one row per set, a blank line, then the per-category
    /// counts of significant sets.
    pub fn batch(&self, header: &Header, result: &BatchResult) -> Result<()> {
        #[derive(Serialize)]
        struct Body<'a> {
            result: &'a BatchResult,
        }
        self.emit(header, Body { result }, |out| {
            let methods: Vec<String> = result.methods.iter().map(|m| m.to_string()).collect();
            let cols = |prefix: &str| methods.iter().map(|m| format!(",{prefix}{m}")).collect::<String>();
            writeln!(out, "set,category,size,degenerate{}{}", cols("p_"), cols("reject_"))?;
            for s in &result.sets {
                write!(out, "{},{},{},{}", s.name, s.category, s.size, s.degenerate)?;
                for p in &s.p_values {
                    write!(out, ",{}", num(*p))?;
                }
                for r in &s.reject {
                    write!(out, ",{r}")?;
                }
                writeln!(out)?;
            }
            writeln!(out)?;
            writeln!(out, "category,sets{}", cols(""))?;
            for c in &result.categories {
                write!(out, "{},{}", c.category, c.sets)?;
                for k in &c.significant {
                    write!(out, ",{k}")?;
                }
                writeln!(out)?;
            }
            Ok(())
        })
    }
}

fn innovation(s: &ScenarioSpec) -> &'static str {
    match s.innovation {
        hdpe::simulate::Innovation::Normal => "normal",
        hdpe::simulate::Innovation::Gamma => "gamma",
    }
}
