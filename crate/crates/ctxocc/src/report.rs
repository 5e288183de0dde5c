//! Output files of a run.
//!
//! Every CSV starts with a `#schema=<name>` line followed by a header row.
//! Reals are written in Rust's shortest round-trip form and undefined values
//! as `NA`, so a rerun with the same configuration writes identical bytes.
//!
//! | file | columns |
//! |------|---------|
//! | `metrics.csv` | instance_index, fold, framework, classifier, prequential_auc, g_mean, sensitivity, specificity |
//! | `thresholds.csv` | framework, classifier, fold, threshold, calibrated, posthoc_threshold, mean_auc, mean_g_mean |
//! | `state.csv` | framework, classifier, fold, context_id, training_count |
//! | `clusterings.csv` | framework, classifier, fold, cluster_id, weight, radius, center_0 … center_{d-1} |
//! | `reclusters.csv` | framework, classifier, fold, at, clusters, inherited, fresh, dropped, kept_previous, degenerate |
//!
//! The last two are written only when some series uses OCCluster.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{fold_seed, RunOutcome};

pub const METRICS_SCHEMA: &str = "ctxocc.metrics.v1";
pub const THRESHOLDS_SCHEMA: &str = "ctxocc.thresholds.v1";
pub const STATE_SCHEMA: &str = "ctxocc.state.v1";
pub const CLUSTERINGS_SCHEMA: &str = "ctxocc.clusterings.v1";
pub const RECLUSTERS_SCHEMA: &str = "ctxocc.reclusters.v1";
pub const MANIFEST_SCHEMA: &str = "ctxocc.manifest.v1";
pub const CBTT_SCHEMA: &str = "ctxocc.cbtt.v1";

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// CSV writer positioned after the schema line.
pub(crate) struct Table {
    path: std::path::PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub(crate) fn create(path: &Path, schema: &str, header: &[String]) -> Result<Self> {
        let io = |e| HarnessError::io(format!("writing {}", path.display()), e);
        let mut file = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(file, "#schema={schema}").map_err(io)?;
        let mut table = Table {
            path: path.to_path_buf(),
            inner: csv::Writer::from_writer(file),
        };
        table.row(header)?;
        Ok(table)
    }

    pub(crate) fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        self.inner
            .write_record(fields.iter().map(|f| f.as_ref()))
            .map_err(|e| {
                HarnessError::io(
                    format!("writing {}", self.path.display()),
                    std::io::Error::other(e),
                )
            })
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| HarnessError::io(format!("writing {}", self.path.display()), e))
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes every output file of `outcome` into `config.out`.
pub fn write_run(config: &ExperimentConfig, outcome: &RunOutcome) -> Result<()> {
    let dir = config.out.as_path();
    std::fs::create_dir_all(dir)
        .map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
    write_metrics(&dir.join(METRICS_FILE), outcome)?;
    write_thresholds(&dir.join("thresholds.csv"), outcome)?;
    write_state(&dir.join("state.csv"), outcome)?;
    if outcome
        .series
        .iter()
        .any(|s| s.folds.iter().any(|f| f.clustering.is_some()))
    {
        write_clusterings(&dir.join("clusterings.csv"), outcome)?;
        write_reclusters(&dir.join("reclusters.csv"), outcome)?;
    }
    write_manifest(&dir.join(MANIFEST_FILE), config, outcome)
}

/// Long format, ordered by instance index, then series, then fold.
pub fn write_metrics(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut t = Table::create(
        path,
        METRICS_SCHEMA,
        &header(&[
            "instance_index",
            "fold",
            "framework",
            "classifier",
            "prequential_auc",
            "g_mean",
            "sensitivity",
            "specificity",
        ]),
    )?;
    let mut rows = Vec::new();
    for (si, s) in outcome.series.iter().enumerate() {
        for f in &s.folds {
            for p in &f.points {
                rows.push((p.instance_index, si, f.fold, s, p));
            }
        }
    }
    rows.sort_by_key(|(i, si, fold, _, _)| (*i, *si, *fold));
    for (index, _, fold, s, p) in rows {
        t.row(&[
            index.to_string(),
            fold.to_string(),
            s.framework.to_string(),
            s.classifier.to_string(),
            na(p.auc),
            na(p.g_mean),
            na(p.sensitivity),
            na(p.specificity),
        ])?;
    }
    t.finish()
}

pub fn write_thresholds(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut t = Table::create(
        path,
        THRESHOLDS_SCHEMA,
        &header(&[
            "framework",
            "classifier",
            "fold",
            "threshold",
            "calibrated",
            "posthoc_threshold",
            "mean_auc",
            "mean_g_mean",
        ]),
    )?;
    for s in &outcome.series {
        for f in &s.folds {
            t.row(&[
                s.framework.to_string(),
                s.classifier.to_string(),
                f.fold.to_string(),
                f.threshold.to_string(),
                f.calibrated.to_string(),
                na(f.posthoc_threshold),
                na(f.mean_auc()),
                na(f.mean_g_mean()),
            ])?;
        }
    }
    t.finish()
}

pub fn write_state(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut t = Table::create(
        path,
        STATE_SCHEMA,
        &header(&[
            "framework",
            "classifier",
            "fold",
            "context_id",
            "training_count",
        ]),
    )?;
    for s in &outcome.series {
        for f in &s.folds {
            for (ctx, count) in &f.training_counts {
                t.row(&[
                    s.framework.to_string(),
                    s.classifier.to_string(),
                    f.fold.to_string(),
                    ctx.to_string(),
                    count.to_string(),
                ])?;
            }
        }
    }
    t.finish()
}

pub fn write_clusterings(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let d = outcome
        .series
        .iter()
        .flat_map(|s| &s.folds)
        .filter_map(|f| f.clustering.as_ref())
        .flat_map(|c| c.clusters().first())
        .map(|c| c.center.len())
        .next()
        .unwrap_or(0);
    let mut names = header(&[
        "framework",
        "classifier",
        "fold",
        "cluster_id",
        "weight",
        "radius",
    ]);
    names.extend((0..d).map(|i| format!("center_{i}")));
    let mut t = Table::create(path, CLUSTERINGS_SCHEMA, &names)?;
    for s in &outcome.series {
        for f in &s.folds {
            let Some(c) = &f.clustering else { continue };
            for m in c.clusters() {
                let mut row = vec![
                    s.framework.to_string(),
                    s.classifier.to_string(),
                    f.fold.to_string(),
                    m.id.to_string(),
                    m.weight.to_string(),
                    m.radius.to_string(),
                ];
                row.extend(m.center.iter().map(f64::to_string));
                t.row(&row)?;
            }
        }
    }
    t.finish()
}

pub fn write_reclusters(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut t = Table::create(
        path,
        RECLUSTERS_SCHEMA,
        &header(&[
            "framework",
            "classifier",
            "fold",
            "at",
            "clusters",
            "inherited",
            "fresh",
            "dropped",
            "kept_previous",
            "degenerate",
        ]),
    )?;
    for s in &outcome.series {
        for f in &s.folds {
            for e in &f.recluster_events {
                t.row(&[
                    s.framework.to_string(),
                    s.classifier.to_string(),
                    f.fold.to_string(),
                    e.at.to_string(),
                    e.clusters.to_string(),
                    e.inherited.to_string(),
                    e.fresh.to_string(),
                    e.dropped.to_string(),
                    e.kept_previous.to_string(),
                    e.degenerate.to_string(),
                ])?;
            }
        }
    }
    t.finish()
}

/// The resolved config as a loadable config file, with seeds and versions in comments.
pub fn manifest_text(config: &ExperimentConfig, outcome: &RunOutcome) -> String {
    let mut s = format!("#schema={MANIFEST_SCHEMA}\n");
    s.push_str(&format!(
        "# ctxocc {} / ctxocc-core {}\n",
        env!("CARGO_PKG_VERSION"),
        ctxocc_core::VERSION
    ));
    s.push_str(&format!(
        "# instances {} (minority {})\n",
        outcome.instances, outcome.minority
    ));
    if let Some(seed) = config.stream.seed() {
        s.push_str(&format!("# stream seed {seed}\n"));
    }
    for fold in 0..config.evaluation.fold_count {
        s.push_str(&format!(
            "# fold {fold} framework seed {}\n",
            fold_seed(config.seed, fold)
        ));
    }
    s.push_str(&config.to_key_values_text());
    s
}

pub fn write_manifest(path: &Path, config: &ExperimentConfig, outcome: &RunOutcome) -> Result<()> {
    std::fs::write(path, manifest_text(config, outcome))
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}
