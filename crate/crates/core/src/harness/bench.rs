use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::ablation::run_seeds;
use super::aggregate::Aggregate;
use super::config::{Algorithm, RunConfig};

/// Every learner that supports `base.env`, over `seeds`. With `dir`, runs
/// go to `dir/<algorithm>/` and a `summary.csv` of final means and stds is
/// written next to them.
pub fn bench(base: &RunConfig, seeds: &[u64], dir: Option<&Path>) -> Result<Vec<(Algorithm, Aggregate)>> {
    let results = Algorithm::for_env(base.env)
        .into_iter()
        .map(|alg| {
            let mut cfg = base.clone();
            cfg.algorithm = alg;
            let sub = dir.map(|d| d.join(alg.name()));
            Ok((alg, run_seeds(&cfg, seeds, sub.as_deref())?.0))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(d) = dir {
        let path = d.join("summary.csv");
        fs::write(&path, write_summary(base, &results)).map_err(|e| Error::io(path, e))?;
    }
    Ok(results)
}

/// `algorithm,mean_<c>,std_<c>,...` at the last evaluation point.
pub fn write_summary(base: &RunConfig, results: &[(Algorithm, Aggregate)]) -> String {
    let names = base.spec().metric_names();
    let mut out = String::from("algorithm");
    for n in names {
        out.push_str(&format!(",mean_{n},std_{n}"));
    }
    out.push('\n');
    for (alg, agg) in results {
        out.push_str(alg.name());
        let last = agg.rows.last();
        for c in 0..names.len() {
            match last.and_then(|r| r.stats[c]) {
                Some((m, s)) => out.push_str(&format!(",{m},{s}")),
                None => out.push_str(",NA,NA"),
            }
        }
        out.push('\n');
    }
    out
}
