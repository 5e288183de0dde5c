//! Contextual classifier selection: one one-class classifier per context,
//! with each instance scored (and possibly used for training) by the
//! classifier of the context it is routed to.
//!
//! * [`Single`]: one classifier for the whole stream (the baseline).
//! * [`OcComplete`]: the context id travels with every instance.
//! * [`OcFuzzy`]: context ids are known only while initialising; afterwards a
//!   naive Bayes decider predicts them.
//! * [`OcCluster`]: contexts are discovered by stream clustering and tracked
//!   across periodic re-clusterings.

pub mod naive_bayes;
mod occluster;
mod occomplete;
mod ocfuzzy;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use naive_bayes::NaiveBayes;
pub use occluster::{OcCluster, ReclusterEvent};
pub use occomplete::{OcComplete, Single};
pub use ocfuzzy::OcFuzzy;

use crate::classifier::{
    AnomalyScore, BaseClassifier, ClassifierKind, ClassifierSettings, MinMaxScaler,
    OneClassClassifier,
};
use crate::clustering::{Clustering, DEFAULT_K_MAX, DEFAULT_K_MIN};
use crate::error::{bail, Error, Result};
use crate::rng::derive_seed;
use crate::sampling::{smote_points, DEFAULT_NEIGHBOURS};
use crate::stream::Instance;

/// Map from context (or cluster) id to that context's model.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextModelSet<M> {
    models: BTreeMap<usize, M>,
}

impl<M> Default for ContextModelSet<M> {
    fn default() -> Self {
        ContextModelSet {
            models: BTreeMap::new(),
        }
    }
}

impl<M> ContextModelSet<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: usize, model: M) -> Option<M> {
        self.models.insert(id, model)
    }

    pub fn get(&self, id: usize) -> Option<&M> {
        self.models.get(&id)
    }

    pub fn get_mut(&mut self, id: usize) -> Option<&mut M> {
        self.models.get_mut(&id)
    }

    pub fn remove(&mut self, id: usize) -> Option<M> {
        self.models.remove(&id)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.models.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.models.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &M)> {
        self.models.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameworkConfig {
    /// Instances consumed by initialisation (all contexts together).
    pub initial_points: usize,
    /// Minimum training set per context; shortfalls are filled by SMOTE.
    pub min_points: usize,
    pub contexts: usize,
    /// Decision threshold τ on anomaly scores.
    pub threshold: f64,
    pub classifier: ClassifierKind,
    pub settings: ClassifierSettings,
    pub recluster_period: usize,
    pub movement_threshold: f64,
    pub inclusion_threshold: f64,
    pub smote_neighbours: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        FrameworkConfig {
            initial_points: 2000,
            min_points: 1000,
            contexts: 1,
            threshold: 0.0,
            classifier: ClassifierKind::Autoencoder,
            settings: ClassifierSettings::default(),
            recluster_period: 2000,
            movement_threshold: 0.2,
            inclusion_threshold: 1.0,
            smote_neighbours: DEFAULT_NEIGHBOURS,
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            seed: 0,
        }
    }
}

impl FrameworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_points == 0 || self.initial_points < self.min_points {
            bail!(
                Config,
                "need initial_points >= min_points >= 1 (got {} and {})",
                self.initial_points,
                self.min_points
            );
        }
        if self.recluster_period == 0 {
            bail!(Config, "recluster_period must be at least 1");
        }
        if !(self.movement_threshold > 0.0 && self.movement_threshold <= 1.0) {
            bail!(
                Config,
                "movement_threshold must lie in (0, 1], got {}",
                self.movement_threshold
            );
        }
        if self.contexts == 0 {
            bail!(Config, "contexts must be at least 1");
        }
        if !self.threshold.is_finite() {
            bail!(Config, "threshold must be finite");
        }
        if !(self.inclusion_threshold > 0.0) {
            bail!(Config, "inclusion_threshold must be positive");
        }
        if self.smote_neighbours == 0 {
            bail!(Config, "smote_neighbours must be at least 1");
        }
        if self.k_min == 0 || self.k_max < self.k_min {
            bail!(Config, "invalid k range [{}, {}]", self.k_min, self.k_max);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Normal,
    Outlier,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamVerdict {
    pub label: Verdict,
    pub score: AnomalyScore,
    pub context: usize,
}

impl StreamVerdict {
    fn new(score: AnomalyScore, threshold: f64, context: usize) -> Self {
        let label = if score.value() > threshold {
            Verdict::Outlier
        } else {
            Verdict::Normal
        };
        StreamVerdict {
            label,
            score,
            context,
        }
    }
}

/// Whether an instance may update the selected classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Training {
    /// Score only (e.g. the instance belongs to a withheld fold).
    Never,
    /// Train iff the verdict is NORMAL.
    OnNormal,
    /// Train regardless of the verdict (threshold calibration with known labels).
    Always,
}

impl Training {
    fn permits(self, label: Verdict) -> bool {
        match self {
            Training::Never => false,
            Training::OnNormal => label == Verdict::Normal,
            Training::Always => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameworkKind {
    Single,
    OcComplete,
    OcFuzzy,
    OcCluster,
}

impl FrameworkKind {
    pub const ALL: [FrameworkKind; 4] = [
        FrameworkKind::Single,
        FrameworkKind::OcComplete,
        FrameworkKind::OcFuzzy,
        FrameworkKind::OcCluster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameworkKind::Single => "single",
            FrameworkKind::OcComplete => "occomplete",
            FrameworkKind::OcFuzzy => "ocfuzzy",
            FrameworkKind::OcCluster => "occluster",
        }
    }
}

impl fmt::Display for FrameworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(FrameworkKind::Single),
            "occomplete" => Ok(FrameworkKind::OcComplete),
            "ocfuzzy" => Ok(FrameworkKind::OcFuzzy),
            "occluster" => Ok(FrameworkKind::OcCluster),
            other => bail!(
                Config,
                "unknown framework '{}' (expected single, occomplete, ocfuzzy or occluster)",
                other
            ),
        }
    }
}

/// Behaviour shared by every framework after initialisation.
pub trait Framework: Send {
    fn kind(&self) -> FrameworkKind;
    fn threshold(&self) -> f64;
    fn set_threshold(&mut self, threshold: f64);
    /// Scores `instance` with the classifier of its context, then trains that
    /// classifier when `training` allows it.
    fn step(&mut self, instance: &Instance, training: Training) -> Result<StreamVerdict>;
    /// Instances each context's classifier has been trained on since initialisation.
    fn training_counts(&self) -> Vec<(usize, u64)>;
    fn clustering(&self) -> Option<&Clustering> {
        None
    }
    fn recluster_events(&self) -> &[ReclusterEvent] {
        &[]
    }
}

/// Initialises a framework of the given kind on `window`.
///
/// Minority-labelled instances are kept out of every classifier's training
/// set; OCCluster still passes them to its clusterer.
pub fn build(
    kind: FrameworkKind,
    config: &FrameworkConfig,
    window: &[Instance],
) -> Result<Box<dyn Framework>> {
    Ok(match kind {
        FrameworkKind::Single => Box::new(Single::initialize(config, window)?),
        FrameworkKind::OcComplete => Box::new(OcComplete::initialize(config, window)?),
        FrameworkKind::OcFuzzy => Box::new(OcFuzzy::initialize(config, window)?),
        FrameworkKind::OcCluster => Box::new(OcCluster::initialize(config, window)?),
    })
}

/// Seed of the classifier trained for context `id` during initialisation.
pub fn classifier_seed(seed: u64, id: usize) -> u64 {
    derive_seed(seed, 0x1000 + id as u64)
}

fn smote_seed(seed: u64, id: usize) -> u64 {
    derive_seed(seed, 0x2000 + id as u64)
}

/// Scaler over the whole initial window, shared by every context's classifier.
fn shared_scaler(config: &FrameworkConfig, window: &[Instance]) -> Result<Option<MinMaxScaler>> {
    if !config.classifier.uses_scaling() {
        return Ok(None);
    }
    MinMaxScaler::fit(window.iter().map(|i| i.features.as_slice())).map(Some)
}

fn check_window(config: &FrameworkConfig, window: &[Instance]) -> Result<usize> {
    config.validate()?;
    let Some(first) = window.first() else {
        bail!(Initialization, "initial window is empty");
    };
    let d = first.dimension();
    for inst in window {
        inst.validate(d, None)?;
    }
    Ok(d)
}

/// Pads `buffer` to `min_points` with SMOTE draws.
fn top_up(buffer: &mut Vec<Vec<f64>>, config: &FrameworkConfig, seed: u64) -> Result<usize> {
    let deficit = config.min_points.saturating_sub(buffer.len());
    if deficit == 0 {
        return Ok(0);
    }
    let refs: Vec<&[f64]> = buffer.iter().map(Vec::as_slice).collect();
    let synthetic = smote_points(&refs, config.smote_neighbours, deficit, seed)?;
    buffer.extend(synthetic.into_iter().map(|s| s.features));
    Ok(deficit)
}

/// Tops up each buffer and trains one classifier per context.
fn fit_per_context(
    config: &FrameworkConfig,
    buffers: &mut BTreeMap<usize, Vec<Vec<f64>>>,
    scaler: &Option<MinMaxScaler>,
) -> Result<ContextModelSet<BaseClassifier>> {
    let mut models = ContextModelSet::new();
    for (id, buffer) in buffers.iter_mut() {
        if buffer.is_empty() {
            bail!(
                Initialization,
                "context {} has no training instances in the initial window",
                id
            );
        }
        top_up(buffer, config, smote_seed(config.seed, *id))?;
        let clf = BaseClassifier::fit(
            config.classifier,
            &config.settings,
            buffer,
            scaler.clone(),
            classifier_seed(config.seed, *id),
        )
        .map_err(|e| Error::Initialization(alloc::format!("context {}: {}", id, e)))?;
        models.insert(*id, clf);
    }
    Ok(models)
}

/// Routing-independent half of a framework step: score with the chosen
/// classifier, label against τ, train when allowed.
#[derive(Clone, Debug)]
struct ModelBank {
    models: ContextModelSet<BaseClassifier>,
    trained: BTreeMap<usize, u64>,
    threshold: f64,
}

impl ModelBank {
    fn new(models: ContextModelSet<BaseClassifier>, threshold: f64) -> Self {
        let trained = models.ids().map(|id| (id, 0)).collect();
        ModelBank {
            models,
            trained,
            threshold,
        }
    }

    fn evaluate(
        &mut self,
        id: usize,
        x: &[f64],
        training: impl FnOnce(Verdict) -> bool,
    ) -> Result<StreamVerdict> {
        let Some(model) = self.models.get_mut(id) else {
            bail!(Contract, "no classifier for context {}", id);
        };
        let verdict = StreamVerdict::new(model.score(x)?, self.threshold, id);
        if training(verdict.label) {
            model.train(x)?;
            *self.trained.entry(id).or_insert(0) += 1;
        }
        Ok(verdict)
    }

    fn counts(&self) -> Vec<(usize, u64)> {
        self.trained.iter().map(|(k, v)| (*k, *v)).collect()
    }

    fn replace(&mut self, models: ContextModelSet<BaseClassifier>) {
        self.trained = models.ids().map(|id| (id, 0)).collect();
        self.models = models;
    }
}
