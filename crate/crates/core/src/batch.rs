//! Per-feature-set testing with Benjamini-Hochberg control inside each
//! category.
//!
//! Feature sets are read from GMT-style lines
//! `name<TAB>category<TAB>member<TAB>member...`. Blank lines and lines
//! starting with `#` are skipped.

use std::collections::HashMap;
use std::path::Path;

use crate::analysis::{analyze_with, Critical, Method, TestOptions};
use crate::data::TwoSampleData;
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    pub name: String,
    pub category: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSetCollection {
    pub sets: Vec<FeatureSet>,
}

impl FeatureSetCollection {
    pub fn parse_gmt(text: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or_default().trim();
            let category = fields.next().map(str::trim).unwrap_or_default();
            if name.is_empty() || category.is_empty() {
                return Err(Error::Malformed(format!(
                    "feature-set line {}: expected `name<TAB>category<TAB>members...`",
                    k + 1
                )));
            }
            let members = fields.map(str::trim).filter(|m| !m.is_empty()).map(String::from).collect();
            sets.push(FeatureSet {
                name: name.to_string(),
                category: category.to_string(),
                members,
            });
        }
        Ok(Self { sets })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_gmt(&text)
    }

    /// Categories in order of first appearance.
    pub fn categories(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.sets {
            if !out.contains(&s.category.as_str()) {
                out.push(&s.category);
            }
        }
        out
    }
}

/// Benjamini-Hochberg step-up rule: rejects every hypothesis whose p-value
/// is at most the largest `p_(k)` with `p_(k) <= k alpha / m`.
pub fn bh_reject(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(bad));
    }
    let m = p_values.len();
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (1..=m)
        .rev()
        .find(|&k| sorted[k - 1] <= k as f64 * alpha / m as f64)
        .map(|k| sorted[k - 1]);
    Ok(match cut {
        Some(c) => p_values.iter().map(|&p| p <= c).collect(),
        None => vec![false; m],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub test: TestOptions,
    pub methods: Vec<Method>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            test: TestOptions::default(),
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SetResult {
    pub name: String,
    pub category: String,
    pub size: usize,
    /// Aligned with [`BatchResult::methods`].
    pub p_values: Vec<f64>,
    /// BH decisions within the set's category, aligned with the methods.
    pub reject: Vec<bool>,
    /// The variance estimates vanished; p-values are reported as 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CategoryCounts {
    pub category: String,
    pub sets: usize,
    /// Significant sets per method, aligned with the methods.
    pub significant: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BatchResult {
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub sets: Vec<SetResult>,
    pub categories: Vec<CategoryCounts>,
}

fn resolve(set: &FeatureSet, index: &HashMap<&str, usize>) -> Result<Vec<usize>> {
    let mut cols = Vec::with_capacity(set.members.len());
    for m in &set.members {
        let &c = index.get(m.as_str()).ok_or_else(|| Error::FeatureSet {
            set: set.name.clone(),
            reason: format!("unknown coordinate `{m}`"),
        })?;
        if !cols.contains(&c) {
            cols.push(c);
        }
    }
    if cols.len() < 2 {
        return Err(Error::FeatureSet {
            set: set.name.clone(),
            reason: format!("needs at least 2 distinct members, has {}", cols.len()),
        });
    }
    Ok(cols)
}

/// Runs the selected tests on every set and applies BH per category and
/// method. Sets are distributed over `opts.test.exec`; each set is tested
/// sequentially, so results do not depend on the worker count.
pub fn run_batch(data: &TwoSampleData, sets: &FeatureSetCollection, opts: &BatchOptions) -> Result<BatchResult> {
    let alpha = opts.test.alpha;
    let critical = Critical::new(alpha)?;
    let index: HashMap<&str, usize> = data.names().iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
    let columns = sets.sets.iter().map(|s| resolve(s, &index)).collect::<Result<Vec<_>>>()?;
    let inner = TestOptions {
        exec: Exec::Sequential,
        ..opts.test
    };
    let outcomes = opts.test.exec.map(sets.sets.len(), |k| -> Result<(Vec<f64>, bool)> {
        let sub = data.select_columns(&columns[k])?;
        match analyze_with(&sub, &inner, &critical) {
            Ok(r) => Ok((opts.methods.iter().map(|&m| r.decision(m).p_value).collect(), false)),
            Err(e) if e.is_numerical() => Ok((vec![1.0; opts.methods.len()], true)),
            Err(e) => Err(e),
        }
    });
    let mut results = Vec::with_capacity(sets.sets.len());
    for (set, outcome) in sets.sets.iter().zip(outcomes) {
        let (p_values, degenerate) = outcome?;
        results.push(SetResult {
            name: set.name.clone(),
            category: set.category.clone(),
            size: set.members.len(),
            reject: vec![false; p_values.len()],
            p_values,
            degenerate,
        });
    }
    let mut categories = Vec::new();
    for cat in sets.categories() {
        let members: Vec<usize> = (0..results.len()).filter(|&k| results[k].category == cat).collect();
        let mut significant = vec![0; opts.methods.len()];
        for (mk, count) in significant.iter_mut().enumerate() {
            let ps: Vec<f64> = members.iter().map(|&k| results[k].p_values[mk]).collect();
            for (&k, r) in members.iter().zip(bh_reject(&ps, alpha)?) {
                results[k].reject[mk] = r;
                *count += r as usize;
            }
        }
        categories.push(CategoryCounts {
            category: cat.to_string(),
            sets: members.len(),
            significant,
        });
    }
    Ok(BatchResult {
        alpha,
        methods: opts.methods.clone(),
        sets: results,
        categories,
    })
}
