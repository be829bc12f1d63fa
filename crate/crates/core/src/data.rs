//! Two-sample data model, column summaries and delimited-text ingestion.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2, ShapeBuilder};

use crate::error::{Error, Result};

/// Smallest admissible group size; the fourth-order trace U-statistics
/// divide by `(n - 1)(n - 2)(n - 3)`.
pub const MIN_GROUP_SIZE: usize = 4;

/// Two independent samples over a shared set of coordinates.
///
/// Each group is held as an `n x p` matrix in column-major order, so every
/// coordinate is a contiguous slice. The value is immutable once built.
#[derive(Debug, Clone)]
pub struct TwoSampleData {
    x: Array2<f64>,
    y: Array2<f64>,
    names: Vec<String>,
    labels: [String; 2],
}

impl TwoSampleData {
    /// Builds validated data from two `n x p` matrices.
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        let p = x.ncols();
        let names = (1..=p).map(|i| format!("V{i}")).collect();
        Self::with_names(x, y, names, ["X".to_string(), "Y".to_string()])
    }

    pub fn with_names(
        x: Array2<f64>,
        y: Array2<f64>,
        names: Vec<String>,
        labels: [String; 2],
    ) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::Malformed(format!(
                "groups have different coordinate counts ({} vs {})",
                x.ncols(),
                y.ncols()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::Malformed("no coordinates".into()));
        }
        if names.len() != x.ncols() {
            return Err(Error::Malformed(format!(
                "{} coordinate names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        for (m, label) in [(&x, &labels[0]), (&y, &labels[1])] {
            if m.nrows() < MIN_GROUP_SIZE {
                return Err(Error::GroupSize {
                    group: label.clone(),
                    size: m.nrows(),
                    min: MIN_GROUP_SIZE,
                });
            }
            if let Some(((r, c), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite {
                    line: r as u64 + 1,
                    column: names[c].clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Self {
            x: to_column_major(x),
            y: to_column_major(y),
            names,
            labels,
        })
    }

    /// Builds data from row vectors, one per observation.
    pub fn from_rows(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_matrix(x)?, rows_to_matrix(y)?)
    }

    pub fn n1(&self) -> usize {
        self.x.nrows()
    }

    pub fn n2(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    /// Observations of coordinate `i` in the first group.
    pub fn x_col(&self, i: usize) -> &[f64] {
        column(&self.x, i)
    }

    /// Observations of coordinate `i` in the second group.
    pub fn y_col(&self, i: usize) -> &[f64] {
        column(&self.y, i)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group_labels(&self) -> &[String; 2] {
        &self.labels
    }

    /// Restricts both groups to the given coordinates, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.p()) {
            return Err(Error::Malformed(format!(
                "coordinate index {bad} out of range for p = {}",
                self.p()
            )));
        }
        let pick = |m: &Array2<f64>| {
            let n = m.nrows();
            let mut buf = Vec::with_capacity(n * idx.len());
            for &i in idx {
                buf.extend_from_slice(column(m, i));
            }
            Array2::from_shape_vec((n, idx.len()).f(), buf).expect("shape matches buffer")
        };
        Ok(Self {
            x: pick(&self.x),
            y: pick(&self.y),
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            labels: self.labels.clone(),
        })
    }

    /// Writes the data back out in the same layout [`load_two_sample`]
    /// reads: a header of coordinate names plus a trailing label column.
    /// Values use the shortest representation that parses back bit-exactly.
    pub fn write_delimited<W: Write>(&self, mut out: W, delimiter: char, group_col: &str) -> std::io::Result<()> {
        let d = delimiter.to_string();
        writeln!(out, "{}{d}{group_col}", self.names.join(&d))?;
        for (m, label) in [(&self.x, &self.labels[0]), (&self.y, &self.labels[1])] {
            for row in m.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}{d}{label}", cells.join(&d))?;
            }
        }
        Ok(())
    }
}

fn to_column_major(m: Array2<f64>) -> Array2<f64> {
    if m.t().is_standard_layout() {
        return m;
    }
    let mut out = Array2::zeros(m.raw_dim().f());
    out.assign(&m);
    out
}

fn column(m: &Array2<f64>, i: usize) -> &[f64] {
    let n = m.nrows();
    let all = m.as_slice_memory_order().expect("column-major storage");
    &all[i * n..(i + 1) * n]
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::Malformed(format!(
            "row {} has {} values, expected {p}",
            r + 1,
            rows[r].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), p), flat).expect("rectangular rows"))
}

/// Per-coordinate sufficient statistics for one group.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ColumnSummary {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample variance with divisor `n - 1`.
    pub var: Vec<f64>,
}

impl ColumnSummary {
    /// Summarises an `n x p` matrix column by column.
    pub fn from_matrix(m: ArrayView2<'_, f64>) -> Self {
        let n = m.nrows();
        let mut s = Self {
            n,
            sum: Vec::with_capacity(m.ncols()),
            sumsq: Vec::with_capacity(m.ncols()),
            mean: Vec::with_capacity(m.ncols()),
            var: Vec::with_capacity(m.ncols()),
        };
        for col in m.columns() {
            let (sum, sumsq, mean, var) = column_moments(col.iter().copied(), n);
            s.sum.push(sum);
            s.sumsq.push(sumsq);
            s.mean.push(mean);
            s.var.push(var);
        }
        s
    }
}

/// Returns `(sum, sum of squares, mean, unbiased variance)`; the variance
/// is computed from centred values and is therefore never negative.
pub(crate) fn column_moments<I>(values: I, n: usize) -> (f64, f64, f64, f64)
where
    I: Iterator<Item = f64> + Clone,
{
    let (sum, sumsq) = values.clone().fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let var = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    (sum, sumsq, mean, var)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GroupSummaries {
    pub x: ColumnSummary,
    pub y: ColumnSummary,
}

pub fn summarize_columns(data: &TwoSampleData) -> GroupSummaries {
    GroupSummaries {
        x: ColumnSummary::from_matrix(data.x()),
        y: ColumnSummary::from_matrix(data.y()),
    }
}

/// Where group labels come from when loading a delimited file.
#[derive(Debug, Clone)]
pub enum GroupSource {
    /// A column of the data file holding one label per row.
    Column(String),
    /// A separate file with one label per line, aligned with the data rows.
    LabelFile(PathBuf),
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub groups: GroupSource,
    /// Which labels form the first and second sample. When absent, the file
    /// must contain exactly two labels, ordered by first appearance.
    pub group_order: Option<[String; 2]>,
    /// Field delimiter; autodetected from the header line when `None`.
    pub delimiter: Option<u8>,
}

impl LoadOptions {
    pub fn group_column(name: impl Into<String>) -> Self {
        Self {
            groups: GroupSource::Column(name.into()),
            group_order: None,
            delimiter: None,
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a comma- or tab-delimited matrix with a header row of coordinate
/// names and splits its rows into two groups.
pub fn load_two_sample(path: &Path, opts: &LoadOptions) -> Result<TwoSampleData> {
    let text = read_file(path)?;
    parse_two_sample(&text, opts)
}

pub fn parse_two_sample(text: &str, opts: &LoadOptions) -> Result<TwoSampleData> {
    let header_line = text.lines().next().unwrap_or_default();
    let delimiter = opts
        .delimiter
        .unwrap_or(if header_line.contains('\t') { b'\t' } else { b',' });
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let label_idx = match &opts.groups {
        GroupSource::Column(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Malformed(format!("no group column `{name}` in header")))?,
        ),
        GroupSource::LabelFile(_) => None,
    };
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(c, _)| Some(c) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::Malformed("no coordinate columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut row_labels: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Malformed(format!(
                "line {line}: {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let mut values = Vec::with_capacity(names.len());
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                row_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    line,
                    column: header[c].clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }

    if let GroupSource::LabelFile(path) = &opts.groups {
        row_labels = read_file(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if row_labels.len() != rows.len() {
            return Err(Error::Malformed(format!(
                "label file has {} labels for {} data rows",
                row_labels.len(),
                rows.len()
            )));
        }
    }

    let order = match &opts.group_order {
        Some(o) => o.clone(),
        None => {
            let mut seen: Vec<&String> = Vec::new();
            for l in &row_labels {
                if !seen.contains(&l) {
                    seen.push(l);
                }
            }
            if seen.len() != 2 {
                return Err(Error::Malformed(format!(
                    "expected exactly two groups, found {}",
                    seen.len()
                )));
            }
            [seen[0].clone(), seen[1].clone()]
        }
    };

    let mut by_group: HashMap<&str, Vec<Vec<f64>>> = HashMap::new();
    for (label, row) in row_labels.iter().zip(rows) {
        if order.contains(label) {
            by_group.entry(label.as_str()).or_default().push(row);
        }
    }
    let mut take = |label: &str| by_group.remove(label).unwrap_or_default();
    let (xr, yr) = (take(&order[0]), take(&order[1]));
    for (label, r) in [(&order[0], &xr), (&order[1], &yr)] {
        if r.len() < MIN_GROUP_SIZE {
            return Err(Error::GroupSize {
                group: label.clone(),
                size: r.len(),
                min: MIN_GROUP_SIZE,
            });
        }
    }
    let p = names.len();
    let to_matrix = |r: Vec<Vec<f64>>| {
        let n = r.len();
        Array2::from_shape_vec((n, p), r.into_iter().flatten().collect()).expect("rectangular")
    };
    TwoSampleData::with_names(to_matrix(xr), to_matrix(yr), names, order)
}
