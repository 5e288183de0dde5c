//! Cross-run comparison with the correlated Bayesian t-test.
//!
//! Each series of a run (one framework/classifier pairing) is reduced to its
//! per-fold mean metric. Every series is compared with a baseline series:
//! the differences `series − baseline` per fold feed the test, so `p_right`
//! is the probability that the series is practically better.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctxocc_core::evaluation::{correlated_bayesian_t_test, PosteriorSummary};

use crate::config::{ExperimentConfig, KeyValues};
use crate::error::{HarnessError, Result};
use crate::report::{Table, CBTT_SCHEMA, MANIFEST_FILE, METRICS_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Auc,
    GMean,
}

impl Metric {
    fn column(self) -> &'static str {
        match self {
            Metric::Auc => "prequential_auc",
            Metric::GMean => "g_mean",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auc" | "prequential_auc" => Ok(Metric::Auc),
            "g_mean" | "gmean" => Ok(Metric::GMean),
            other => Err(format!("unknown metric '{other}' (expected auc or g_mean)")),
        }
    }
}

/// Per-fold mean of one metric for one series.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldMeans {
    pub label: String,
    pub means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub label: String,
    pub differences: Vec<f64>,
    pub summary: PosteriorSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareOptions {
    pub metric: Metric,
    pub rope: f64,
    /// Correlation between folds; `None` uses `1 / fold_count`.
    pub rho: Option<f64>,
    /// Label of the baseline series; `None` takes the first series found.
    pub baseline: Option<String>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            metric: Metric::Auc,
            rope: ctxocc_core::evaluation::DEFAULT_ROPE,
            rho: None,
            baseline: None,
        }
    }
}

struct LoadedRun {
    config: ExperimentConfig,
    series: Vec<FoldMeans>,
}

fn load_run(dir: &Path, metric: Metric, prefix: &str) -> Result<LoadedRun> {
    let manifest = dir.join(MANIFEST_FILE);
    let config = ExperimentConfig::from_key_values(&KeyValues::from_file(&manifest)?)
        .map_err(|e| HarnessError::Comparison(format!("{}: {e}", manifest.display())))?;
    let path = dir.join(METRICS_FILE);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&path)
        .map_err(|e| {
            HarnessError::io(
                format!("opening {}", path.display()),
                std::io::Error::other(e),
            )
        })?;
    let bad = |line: u64, message: String| HarnessError::Parse {
        path: path.clone(),
        line,
        message,
    };
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Schema {
                path: path.clone(),
                message: format!("no column named '{name}'"),
            })
    };
    let (fold_c, fw_c, clf_c, value_c) = (
        col("fold")?,
        col("framework")?,
        col("classifier")?,
        col(metric.column())?,
    );

    // (series order, fold) -> (sum, count)
    let mut order: Vec<String> = Vec::new();
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let label = format!("{}{}/{}", prefix, &record[fw_c], &record[clf_c]);
        let si = match order.iter().position(|l| *l == label) {
            Some(i) => i,
            None => {
                order.push(label);
                order.len() - 1
            }
        };
        let fold: usize = record[fold_c]
            .parse()
            .map_err(|_| bad(line, format!("bad fold '{}'", &record[fold_c])))?;
        let raw = &record[value_c];
        let entry = sums.entry((si, fold)).or_insert((0.0, 0));
        if raw != "NA" {
            let v: f64 = raw
                .parse()
                .map_err(|_| bad(line, format!("bad value '{raw}'")))?;
            entry.0 += v;
            entry.1 += 1;
        }
    }
    let k = config.evaluation.fold_count;
    let mut series = Vec::new();
    for (si, label) in order.into_iter().enumerate() {
        let folds: Vec<usize> = sums
            .range((si, 0)..(si + 1, 0))
            .map(|((_, f), _)| *f)
            .collect();
        if folds != (0..k).collect::<Vec<_>>() {
            return Err(HarnessError::Comparison(format!(
                "{label} in {} has folds {folds:?}, expected 0..{k}",
                dir.display()
            )));
        }
        let means = (0..k)
            .map(|f| {
                let (sum, n) = sums[&(si, f)];
                if n == 0 {
                    Err(HarnessError::Comparison(format!(
                        "{label} fold {f} has no defined {}",
                        metric.column()
                    )))
                } else {
                    Ok(sum / n as f64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(FoldMeans { label, means });
    }
    Ok(LoadedRun { config, series })
}

/// Loads each run directory and compares every series against the baseline.
pub fn compare_runs(dirs: &[PathBuf], options: &CompareOptions) -> Result<Vec<Comparison>> {
    if dirs.is_empty() {
        return Err(HarnessError::Comparison("no run directories given".into()));
    }
    let mut runs = Vec::new();
    for (i, dir) in dirs.iter().enumerate() {
        let prefix = if dirs.len() > 1 {
            format!("run{i}:")
        } else {
            String::new()
        };
        runs.push(load_run(dir, options.metric, &prefix)?);
    }
    let first = runs[0].config.clone();
    for (dir, run) in dirs.iter().zip(&runs).skip(1) {
        let c = &run.config;
        if c.evaluation.fold_count != first.evaluation.fold_count {
            return Err(HarnessError::Comparison(format!(
                "{} uses {} folds but {} uses {}",
                dir.display(),
                c.evaluation.fold_count,
                dirs[0].display(),
                first.evaluation.fold_count
            )));
        }
        if c.stream != first.stream || c.length != first.length {
            return Err(HarnessError::Comparison(format!(
                "{} was run on a different stream than {}",
                dir.display(),
                dirs[0].display()
            )));
        }
    }
    let series: Vec<FoldMeans> = runs.into_iter().flat_map(|r| r.series).collect();
    let base_index = match &options.baseline {
        Some(b) => series
            .iter()
            .position(|s| s.label == *b)
            .ok_or_else(|| HarnessError::Comparison(format!("baseline '{b}' not found")))?,
        None => 0,
    };
    let base = series
        .get(base_index)
        .ok_or_else(|| HarnessError::Comparison("runs contain no metrics".into()))?;
    if series.len() < 2 {
        return Err(HarnessError::Comparison(
            "need at least two series to compare".into(),
        ));
    }
    let k = first.evaluation.fold_count;
    let rho = options.rho.unwrap_or(1.0 / k as f64);
    series
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != base_index)
        .map(|(_, s)| {
            let differences: Vec<f64> = s
                .means
                .iter()
                .zip(&base.means)
                .map(|(a, b)| a - b)
                .collect();
            let summary = correlated_bayesian_t_test(&differences, rho, options.rope)
                .map_err(|e| HarnessError::Comparison(e.to_string()))?;
            Ok(Comparison {
                label: format!("{} vs {}", s.label, base.label),
                differences,
                summary,
            })
        })
        .collect()
}

pub fn write_report(path: &Path, comparisons: &[Comparison]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| HarnessError::io(format!("creating {}", parent.display()), e))?;
    }
    let header: Vec<String> = ["comparison", "p_left", "p_rope", "p_right"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut t = Table::create(path, CBTT_SCHEMA, &header)?;
    for c in comparisons {
        t.row(&[
            c.label.clone(),
            c.summary.p_left.to_string(),
            c.summary.p_rope.to_string(),
            c.summary.p_right.to_string(),
        ])?;
    }
    t.finish()
}
