//! Flat `key = value` experiment configuration.
//!
//! A config file holds one assignment per line; `#` starts a comment. Command
//! line overrides use the same keys as `--key=value` and win over the file.
//! Every key is validated when the [`ExperimentConfig`] is built, and errors
//! name the offending key. [`ExperimentConfig::to_key_values`] echoes the fully
//! resolved configuration, which parses back to an identical config.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctxocc_core::classifier::{ClassifierKind, ClassifierSettings};
use ctxocc_core::evaluation::EvaluationSettings;
use ctxocc_core::framework::{FrameworkConfig, FrameworkKind};

use crate::error::{HarnessError, Result};
use crate::presets::StreamSpec;

/// Raw assignments, last write wins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::config(
                    format!("line {}", n + 1),
                    format!("expected key = value, found '{line}'"),
                ));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(HarnessError::config(format!("line {}", n + 1), "empty key"));
            }
            kv.set(key, value.trim());
        }
        Ok(kv)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Applies one `--key=value` argument.
    pub fn apply_override(&mut self, arg: &str) -> Result<()> {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| HarnessError::config(arg, "overrides must look like --key=value"))?;
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| HarnessError::config(body, "override is missing '=value'"))?;
        if key.is_empty() {
            return Err(HarnessError::config(arg, "empty key"));
        }
        self.set(key, value);
        Ok(())
    }

    /// Applies a command-line tail where each override is `--key=value` or `--key value`.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            if arg.contains('=') {
                self.apply_override(arg)?;
                i += 1;
            } else {
                let value = args
                    .get(i + 1)
                    .filter(|v| !v.starts_with("--"))
                    .ok_or_else(|| {
                        HarnessError::config(
                            arg.trim_start_matches('-'),
                            "override is missing a value",
                        )
                    })?;
                self.apply_override(&format!("{arg}={value}"))?;
                i += 2;
            }
        }
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Typed access that remembers which keys were consumed.
pub(crate) struct Reader<'a> {
    kv: &'a KeyValues,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(kv: &'a KeyValues) -> Self {
        Reader {
            kv,
            used: BTreeSet::new(),
        }
    }

    pub(crate) fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.kv.get(key)
    }

    pub(crate) fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| HarnessError::config(key, format!("cannot parse '{v}': {e}")))
            })
            .transpose()
    }

    pub(crate) fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub(crate) fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| HarnessError::config(key, format!("cannot parse '{s}': {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Rejects keys that were present but never read.
    pub(crate) fn finish(self) -> Result<()> {
        match self.kv.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(HarnessError::config(k, "unknown key")),
            None => Ok(()),
        }
    }
}

pub(crate) fn ensure(ok: bool, key: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::config(key, message))
    }
}

/// Formats a list the way [`Reader::list`] reads it.
pub(crate) fn join<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// How the online decision threshold τ is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdMode {
    /// Informedness-selected on a labelled pilot replay.
    Auto,
    Fixed(f64),
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(ThresholdMode::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(ThresholdMode::Fixed(v)),
            _ => Err("expected 'auto' or a finite number".into()),
        }
    }
}

impl Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdMode::Auto => f.write_str("auto"),
            ThresholdMode::Fixed(v) => write!(f, "{v}"),
        }
    }
}

/// Everything a run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Master seed; framework seeds are derived from it per fold.
    pub seed: u64,
    pub stream: StreamSpec,
    /// Instances drawn from a generator, or an upper bound on rows read from CSV.
    pub length: usize,
    pub frameworks: Vec<FrameworkKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub threshold: ThresholdMode,
    /// Template for every replica; `seed` and `threshold` are filled in per fold.
    pub framework: FrameworkConfig,
    pub evaluation: EvaluationSettings,
    pub out: PathBuf,
    /// Worker threads, 0 meaning one per available core. Never affects output.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut r = Reader::new(kv);
        let seed = r.get("seed", 1u64)?;
        let stream = StreamSpec::read(&mut r, seed)?;
        let length = r.get("length", 100_000usize)?;
        ensure(length > 0, "length", "must be positive")?;
        let frameworks = r
            .list::<FrameworkKind>("framework")?
            .unwrap_or_else(|| vec![FrameworkKind::Single]);
        ensure(
            !frameworks.is_empty(),
            "framework",
            "at least one framework is required",
        )?;
        ensure(
            distinct(&frameworks),
            "framework",
            "frameworks are listed twice",
        )?;
        let classifiers = r
            .list::<ClassifierKind>("classifier")?
            .unwrap_or_else(|| vec![ClassifierKind::Autoencoder]);
        ensure(
            !classifiers.is_empty(),
            "classifier",
            "at least one classifier is required",
        )?;
        ensure(
            distinct(&classifiers),
            "classifier",
            "classifiers are listed twice",
        )?;
        let threshold = r.get("threshold", ThresholdMode::Auto)?;

        let j = stream.context_count();
        let d = FrameworkConfig::default();
        let s = ClassifierSettings::default();
        let settings = ClassifierSettings {
            learning_rate: r.get("sa.learning_rate", s.learning_rate)?,
            epochs: r.get("sa.epochs", s.epochs)?,
            hst_window: r.get("hst.window", s.hst_window)?,
            hst_trees: r.get("hst.trees", s.hst_trees)?,
            hst_depth: r.get("hst.depth", s.hst_depth)?,
            hst_size_limit: r.get("hst.size_limit", s.hst_size_limit)?,
            nnd_capacity: r.get("nnd.capacity", s.nnd_capacity)?,
            nnd_threshold: r.get("nnd.threshold", s.nnd_threshold)?,
        };
        ensure(
            settings.learning_rate > 0.0 && settings.learning_rate.is_finite(),
            "sa.learning_rate",
            "must be positive",
        )?;
        ensure(settings.hst_window > 0, "hst.window", "must be positive")?;
        ensure(settings.hst_trees > 0, "hst.trees", "must be positive")?;
        ensure(
            (1..=30).contains(&settings.hst_depth),
            "hst.depth",
            "must lie in 1..=30",
        )?;
        ensure(
            (0.0..1.0).contains(&settings.hst_size_limit),
            "hst.size_limit",
            "must lie in [0, 1)",
        )?;
        ensure(
            settings.nnd_capacity >= 2,
            "nnd.capacity",
            "must be at least 2",
        )?;
        ensure(
            settings.nnd_threshold > 0.0,
            "nnd.threshold",
            "must be positive",
        )?;

        let initial_points = match r.raw("initial_points") {
            None | Some("auto") => 2000 * j,
            Some(v) => v.parse().map_err(|e| {
                HarnessError::config("initial_points", format!("cannot parse '{v}': {e}"))
            })?,
        };
        let framework = FrameworkConfig {
            initial_points,
            min_points: r.get("min_points", d.min_points)?,
            contexts: j,
            threshold: match threshold {
                ThresholdMode::Fixed(v) => v,
                ThresholdMode::Auto => d.threshold,
            },
            classifier: classifiers[0],
            settings,
            recluster_period: r.get("recluster_period", d.recluster_period)?,
            movement_threshold: r.get("movement_threshold", d.movement_threshold)?,
            inclusion_threshold: r.get("inclusion_threshold", d.inclusion_threshold)?,
            smote_neighbours: r.get("smote_neighbours", d.smote_neighbours)?,
            k_min: r.get("k_min", d.k_min)?,
            k_max: r.get("k_max", d.k_max)?,
            seed,
        };
        ensure(
            framework.min_points >= 1,
            "min_points",
            "must be at least 1",
        )?;
        ensure(
            framework.initial_points >= framework.min_points,
            "initial_points",
            format!("must be at least min_points = {}", framework.min_points),
        )?;
        ensure(
            framework.recluster_period >= 1,
            "recluster_period",
            "must be at least 1",
        )?;
        ensure(
            framework.movement_threshold > 0.0 && framework.movement_threshold <= 1.0,
            "movement_threshold",
            "must lie in (0, 1]",
        )?;
        ensure(
            framework.inclusion_threshold > 0.0,
            "inclusion_threshold",
            "must be positive",
        )?;
        ensure(
            framework.smote_neighbours >= 1,
            "smote_neighbours",
            "must be at least 1",
        )?;
        ensure(framework.k_min >= 1, "k_min", "must be at least 1")?;
        ensure(
            framework.k_max >= framework.k_min,
            "k_max",
            "must be at least k_min",
        )?;
        framework
            .validate()
            .map_err(|e| HarnessError::config("framework", e.to_string()))?;
        ensure(
            initial_points < length,
            "initial_points",
            format!("must be below the stream length {length}"),
        )?;

        let e = EvaluationSettings::default();
        let evaluation = EvaluationSettings {
            fold_count: r.get("folds", e.fold_count)?,
            metric_period: r.get("metric_period", e.metric_period)?,
            window: r.get("window", e.window)?,
            calibration_length: r.get("calibration_length", e.calibration_length)?,
        };
        ensure(evaluation.fold_count >= 2, "folds", "must be at least 2")?;
        ensure(
            evaluation.metric_period > 0,
            "metric_period",
            "must be positive",
        )?;
        ensure(evaluation.window > 0, "window", "must be positive")?;
        let out = PathBuf::from(r.get("out", "out".to_string())?);
        let workers = r.get("workers", 0usize)?;
        r.finish()?;
        Ok(ExperimentConfig {
            seed,
            stream,
            length,
            frameworks,
            classifiers,
            threshold,
            framework,
            evaluation,
            out,
            workers,
        })
    }

    /// Loads `path` (if any) and applies `--key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut kv = match path {
            Some(p) => KeyValues::from_file(p)?,
            None => KeyValues::new(),
        };
        kv.apply_overrides(overrides)?;
        Self::from_key_values(&kv)
    }

    /// Evaluation settings actually used: a fixed τ switches calibration off.
    pub fn effective_evaluation(&self) -> EvaluationSettings {
        let mut e = self.evaluation.clone();
        if let ThresholdMode::Fixed(_) = self.threshold {
            e.calibration_length = 0;
        }
        e
    }

    /// The resolved configuration in canonical key order.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let f = &self.framework;
        let s = &f.settings;
        let e = &self.evaluation;
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("seed", self.seed.to_string());
        put("length", self.length.to_string());
        put("framework", join(&self.frameworks));
        put("classifier", join(&self.classifiers));
        put("threshold", self.threshold.to_string());
        put("folds", e.fold_count.to_string());
        put("metric_period", e.metric_period.to_string());
        put("window", e.window.to_string());
        put("calibration_length", e.calibration_length.to_string());
        put("initial_points", f.initial_points.to_string());
        put("min_points", f.min_points.to_string());
        put("recluster_period", f.recluster_period.to_string());
        put("movement_threshold", f.movement_threshold.to_string());
        put("inclusion_threshold", f.inclusion_threshold.to_string());
        put("smote_neighbours", f.smote_neighbours.to_string());
        put("k_min", f.k_min.to_string());
        put("k_max", f.k_max.to_string());
        put("sa.learning_rate", s.learning_rate.to_string());
        put("sa.epochs", s.epochs.to_string());
        put("hst.window", s.hst_window.to_string());
        put("hst.trees", s.hst_trees.to_string());
        put("hst.depth", s.hst_depth.to_string());
        put("hst.size_limit", s.hst_size_limit.to_string());
        put("nnd.capacity", s.nnd_capacity.to_string());
        put("nnd.threshold", s.nnd_threshold.to_string());
        put("out", self.out.display().to_string());
        out.extend(self.stream.to_key_values());
        out
    }

    pub fn to_key_values_text(&self) -> String {
        self.to_key_values()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn distinct<T: PartialEq>(items: &[T]) -> bool {
    items
        .iter()
        .enumerate()
        .all(|(i, a)| !items[..i].contains(a))
}
