use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::run::{parse_metrics, MetricRow};

/// Pointwise statistics of several seeds; `None` where any seed lacks the
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub point: usize,
    /// `(mean, population std)` per column, components first, then `l_plus`,
    /// `l_o` and `l_o_fraction`.
    pub stats: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub columns: Vec<String>,
    pub rows: Vec<AggregateRow>,
}

impl Aggregate {
    pub fn mean(&self, column: &str, row: usize) -> Option<f64> {
        let c = self.columns.iter().position(|n| n == column)?;
        self.rows.get(row)?.stats[c].map(|(m, _)| m)
    }

    pub fn final_mean(&self, column: &str) -> Option<f64> {
        self.mean(column, self.rows.len().checked_sub(1)?)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn row_values(r: &MetricRow) -> Vec<Option<f64>> {
    r.components
        .iter()
        .map(|&v| Some(v))
        .chain([r.l_plus, r.l_o, r.l_o_fraction])
        .collect()
}

/// Mean and population std across seeds at every evaluation point. All runs
/// must share component names and evaluation points.
pub fn aggregate(runs: &[(Vec<String>, Vec<MetricRow>)]) -> Result<Aggregate> {
    let (names, first) = runs.first().ok_or_else(|| Error::GridMismatch("no runs given".into()))?;
    let grid: Vec<usize> = first.iter().map(|r| r.trajectories).collect();
    for (k, (n, rows)) in runs.iter().enumerate() {
        if n != names {
            return Err(Error::GridMismatch(format!("run {k} has columns {n:?}, expected {names:?}")));
        }
        let g: Vec<usize> = rows.iter().map(|r| r.trajectories).collect();
        if g != grid {
            return Err(Error::GridMismatch(format!("run {k} evaluates at {g:?}, expected {grid:?}")));
        }
    }
    let mut columns = names.clone();
    columns.extend(["l_plus", "l_o", "l_o_fraction"].map(String::from));
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &point)| {
            let per_run: Vec<Vec<Option<f64>>> = runs.iter().map(|(_, rows)| row_values(&rows[i])).collect();
            let stats = (0..columns.len())
                .map(|c| {
                    let vals: Option<Vec<f64>> = per_run.iter().map(|v| v[c]).collect();
                    vals.map(|v| mean_std(&v))
                })
                .collect();
            AggregateRow { point, stats }
        })
        .collect();
    Ok(Aggregate { columns, rows })
}

/// `point,mean_<col>,std_<col>,...` with `NA` for missing values.
pub fn write_aggregate(agg: &Aggregate) -> String {
    let mut out = String::from("point");
    for c in &agg.columns {
        out.push_str(&format!(",mean_{c},std_{c}"));
    }
    out.push('\n');
    for r in &agg.rows {
        out.push_str(&r.point.to_string());
        for s in &r.stats {
            match s {
                Some((m, sd)) => out.push_str(&format!(",{m},{sd}")),
                None => out.push_str(",NA,NA"),
            }
        }
        out.push('\n');
    }
    out
}

/// Reads `metrics.csv` from every run directory and writes
/// `aggregate.csv` into `out_dir`.
pub fn aggregate_runs(run_dirs: &[PathBuf], out_dir: &Path) -> Result<Aggregate> {
    let runs = run_dirs
        .iter()
        .map(|d| {
            let path = d.join("metrics.csv");
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            parse_metrics(&text)
        })
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&runs)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("aggregate.csv");
    fs::write(&path, write_aggregate(&agg)).map_err(|e| Error::io(path, e))?;
    Ok(agg)
}
