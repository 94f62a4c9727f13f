use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::config::Method;
use super::runner::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{MeanStd, Scope};

/// Metrics reported per dataset, method and scope.
pub const SUMMARY_METRICS: [&str; 2] = ["sqrt_pehe", "eps_ate"];

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub scope: Scope,
    /// One entry per name in `SUMMARY_METRICS`.
    pub stats: Vec<MeanStd>,
    /// Whether each metric's mean is the smallest among methods for the
    /// same dataset and scope.
    pub best: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Reads and summarizes one or more results files.
pub fn summarize(paths: &[impl AsRef<Path>]) -> Result<Summary> {
    if paths.is_empty() {
        return Err(Error::Config("no results files given".into()));
    }
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_records(p)?);
    }
    Ok(summarize_records(&all))
}

/// Aggregates records per dataset, method and scope. Exact duplicates of a
/// record key are counted once. Records from different configurations are
/// summarized separately, labelled by hash, with a warning.
pub fn summarize_records(records: &[RunRecord]) -> Summary {
    let mut seen = HashSet::new();
    let unique: Vec<&RunRecord> = records
        .iter()
        .filter(|r| seen.insert((r.key(), r.config_hash.clone())))
        .collect();

    let hashes: BTreeSet<&str> = unique.iter().map(|r| r.config_hash.as_str()).collect();
    let mut warnings = Vec::new();
    if hashes.len() > 1 {
        let list: Vec<&str> = hashes.iter().copied().collect();
        let msg = format!("records come from {} configurations ({}); summarized per configuration", list.len(), list.join(", "));
        warn!("{msg}");
        warnings.push(msg);
    }
    let label = |r: &RunRecord| {
        if hashes.len() > 1 {
            format!("{}@{}", r.dataset, r.config_hash)
        } else {
            r.dataset.clone()
        }
    };

    let mut groups: BTreeMap<(String, Scope, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in unique {
        groups.entry((label(r), r.scope, r.method)).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((dataset, scope, method), rs)| {
            let stats = [|r: &RunRecord| r.sqrt_pehe, |r: &RunRecord| r.eps_ate]
                .iter()
                .map(|f| MeanStd::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("groups are non-empty"))
                .collect();
            SummaryRow {
                dataset,
                method,
                scope,
                stats,
                best: vec![false; SUMMARY_METRICS.len()],
            }
        })
        .collect();

    // mark the smallest mean per dataset, scope and metric; ties mark all
    let mut best_mean: BTreeMap<(String, Scope, usize), f64> = BTreeMap::new();
    for r in &rows {
        for (k, s) in r.stats.iter().enumerate() {
            let e = best_mean.entry((r.dataset.clone(), r.scope, k)).or_insert(f64::INFINITY);
            *e = e.min(s.mean);
        }
    }
    for r in &mut rows {
        for k in 0..SUMMARY_METRICS.len() {
            r.best[k] = r.stats[k].mean == best_mean[&(r.dataset.clone(), r.scope, k)];
        }
    }
    Summary { rows, warnings }
}

impl Summary {
    /// CSV with header `dataset,method,scope,metric,mean,std,n`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::io("summary.csv", std::io::Error::other(e));
        w.write_record(["dataset", "method", "scope", "metric", "mean", "std", "n"]).map_err(fail)?;
        for r in &self.rows {
            for (name, s) in SUMMARY_METRICS.iter().zip(&r.stats) {
                w.write_record([
                    r.dataset.clone(),
                    r.method.to_string(),
                    r.scope.to_string(),
                    name.to_string(),
                    s.mean.to_string(),
                    s.std.to_string(),
                    s.n.to_string(),
                ])
                .map_err(fail)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::io("summary.csv", std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned text table; `*` marks the best mean in each column.
    pub fn to_table(&self) -> String {
        let header = ["dataset", "scope", "method", "sqrt(PEHE)", "eps_ATE", "n"];
        let mut cells: Vec<[String; 6]> = vec![header.map(String::from)];
        for r in &self.rows {
            let fmt = |k: usize| format!("{}{}", r.stats[k], if r.best[k] { " *" } else { "" });
            cells.push([
                r.dataset.clone(),
                r.scope.to_string(),
                r.method.to_string(),
                fmt(0),
                fmt(1),
                r.stats[0].n.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..6).map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for row in &cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}
