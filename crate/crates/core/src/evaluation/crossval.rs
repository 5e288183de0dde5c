//! Stream cross-validation: `k` replicas of a framework all test on every
//! instance, but replica `f` never trains on instances whose index is
//! congruent to `f` modulo `k`.

use alloc::vec::Vec;

use super::{
    informedness_threshold, ConfusionMatrix, EvaluationWindow, ScoredTruth, DEFAULT_WINDOW,
};
use crate::clustering::Clustering;
use crate::error::{bail, Result};
use crate::framework::{
    build, Framework, FrameworkConfig, FrameworkKind, ReclusterEvent, Training,
};
use crate::stream::Instance;

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationSettings {
    pub fold_count: usize,
    /// Metrics are emitted after every `metric_period` online instances.
    pub metric_period: usize,
    /// Sliding window size for prequential AUC.
    pub window: usize,
    /// Online instances replayed, with known labels, to pick τ before the
    /// evaluated run. Zero keeps the configured threshold.
    pub calibration_length: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            fold_count: 10,
            metric_period: 500,
            window: DEFAULT_WINDOW,
            calibration_length: 10_000,
        }
    }
}

impl EvaluationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.fold_count < 2 {
            bail!(
                Config,
                "fold_count must be at least 2, got {}",
                self.fold_count
            );
        }
        if self.metric_period == 0 || self.window == 0 {
            bail!(Config, "metric_period and window must be positive");
        }
        Ok(())
    }
}

/// Metrics after `instance_index` stream instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricPoint {
    pub instance_index: u64,
    pub auc: Option<f64>,
    /// Rates at the fold's post-hoc Informedness threshold.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub g_mean: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: usize,
    pub framework: FrameworkKind,
    /// τ used online.
    pub threshold: f64,
    /// Whether τ came from calibration rather than configuration.
    pub calibrated: bool,
    /// Mean Informedness optimum over the emitted windows.
    pub posthoc_threshold: Option<f64>,
    pub points: Vec<MetricPoint>,
    pub training_counts: Vec<(usize, u64)>,
    pub clustering: Option<Clustering>,
    pub recluster_events: Vec<ReclusterEvent>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl FoldResult {
    /// Mean prequential AUC over the emitted points where it is defined.
    pub fn mean_auc(&self) -> Option<f64> {
        mean(self.points.iter().filter_map(|p| p.auc))
    }

    pub fn mean_g_mean(&self) -> Option<f64> {
        mean(self.points.iter().filter_map(|p| p.g_mean))
    }
}

pub fn is_withheld(index: usize, fold: usize, fold_count: usize) -> bool {
    index % fold_count == fold
}

fn truth(instance: &Instance) -> ScoredTruth {
    ScoredTruth {
        score: 0.0,
        minority: instance.is_minority(),
    }
}

/// Runs replica `fold` over `stream`: the first `config.initial_points`
/// instances initialise the framework (minus the withheld fold), every later
/// instance is scored then possibly used for training.
pub fn run_fold(
    stream: &[Instance],
    fold: usize,
    kind: FrameworkKind,
    config: &FrameworkConfig,
    settings: &EvaluationSettings,
) -> Result<FoldResult> {
    settings.validate()?;
    let k = settings.fold_count;
    if fold >= k {
        bail!(Config, "fold {} outside 0..{}", fold, k);
    }
    let initial = config.initial_points;
    if stream.len() <= initial {
        bail!(
            Initialization,
            "stream of {} instances does not outlast the {}-instance initial window",
            stream.len(),
            initial
        );
    }
    let window: Vec<Instance> = stream[..initial]
        .iter()
        .enumerate()
        .filter(|(i, _)| !is_withheld(*i, fold, k))
        .map(|(_, x)| x.clone())
        .collect();
    let online = &stream[initial..];

    let (threshold, calibrated) =
        match calibrate(&window, online, initial, fold, kind, config, settings)? {
            Some(t) => (t, true),
            None => (config.threshold, false),
        };
    let config = FrameworkConfig {
        threshold,
        ..config.clone()
    };
    let mut framework = build(kind, &config, &window)?;

    let mut sliding = EvaluationWindow::new(settings.window)?;
    let mut history: Vec<ScoredTruth> = Vec::with_capacity(online.len());
    let mut emitted: Vec<(u64, Option<f64>, usize)> = Vec::new();
    for (offset, inst) in online.iter().enumerate() {
        let index = initial + offset;
        let training = if is_withheld(index, fold, k) {
            Training::Never
        } else {
            Training::OnNormal
        };
        let v = framework.step(inst, training)?;
        let st = ScoredTruth {
            score: v.score.value(),
            ..truth(inst)
        };
        sliding.push(st.score, st.minority);
        history.push(st);
        if (offset + 1) % settings.metric_period == 0 {
            emitted.push(((index + 1) as u64, sliding.auc(), history.len()));
        }
    }

    let window_of = |end: usize| &history[end.saturating_sub(settings.window)..end];
    let posthoc_threshold =
        informedness_threshold(emitted.iter().map(|(_, _, end)| window_of(*end))).ok();
    let points = emitted
        .iter()
        .map(|(instance_index, auc, end)| {
            let cm = posthoc_threshold.map(|t| ConfusionMatrix::at_threshold(window_of(*end), t));
            MetricPoint {
                instance_index: *instance_index,
                auc: *auc,
                sensitivity: cm.and_then(|c| c.sensitivity()),
                specificity: cm.and_then(|c| c.specificity()),
                g_mean: cm.and_then(|c| c.g_mean()),
            }
        })
        .collect();
    Ok(FoldResult {
        fold,
        framework: kind,
        threshold,
        calibrated,
        posthoc_threshold,
        points,
        training_counts: framework.training_counts(),
        clustering: framework.clustering().cloned(),
        recluster_events: framework.recluster_events().to_vec(),
    })
}

/// Pilot replica trained on known-majority instances only; returns the
/// Informedness threshold of its scores, or `None` when calibration is off
/// or no window holds both classes.
fn calibrate(
    window: &[Instance],
    online: &[Instance],
    initial: usize,
    fold: usize,
    kind: FrameworkKind,
    config: &FrameworkConfig,
    settings: &EvaluationSettings,
) -> Result<Option<f64>> {
    let length = settings.calibration_length.min(online.len());
    if length == 0 {
        return Ok(None);
    }
    let mut pilot: alloc::boxed::Box<dyn Framework> = build(kind, config, window)?;
    let mut scores = Vec::with_capacity(length);
    for (offset, inst) in online[..length].iter().enumerate() {
        let withheld = is_withheld(initial + offset, fold, settings.fold_count);
        let training = if withheld || inst.is_minority() {
            Training::Never
        } else {
            Training::Always
        };
        let v = pilot.step(inst, training)?;
        scores.push(ScoredTruth {
            score: v.score.value(),
            ..truth(inst)
        });
    }
    Ok(informedness_threshold(scores.chunks(settings.window)).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{ClassifierKind, ClassifierSettings};
    use crate::rng::seeded;
    use crate::stream::ClassLabel;
    use alloc::vec;
    use rand::Rng;

    fn stream(n: usize, seed: u64) -> Vec<Instance> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| {
                if rng.random_bool(0.05) {
                    Instance::labelled(
                        vec![rng.random_range(2.0..3.0), rng.random_range(2.0..3.0)],
                        ClassLabel::Minority,
                        Some(0),
                    )
                } else {
                    Instance::labelled(
                        vec![rng.random::<f64>(), rng.random::<f64>()],
                        ClassLabel::Majority,
                        Some(0),
                    )
                }
            })
            .collect()
    }

    fn config() -> FrameworkConfig {
        FrameworkConfig {
            initial_points: 200,
            min_points: 100,
            classifier: ClassifierKind::NearestNeighbour,
            settings: ClassifierSettings::default(),
            threshold: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn fold_assignment_arithmetic() {
        let trained: Vec<usize> = (0..10).filter(|i| !is_withheld(*i, 0, 2)).collect();
        assert_eq!(trained, vec![1, 3, 5, 7, 9]);
    }

    #[test]
    fn every_fold_tests_every_instance() {
        let s = stream(1200, 1);
        let settings = EvaluationSettings {
            fold_count: 3,
            metric_period: 100,
            window: 200,
            calibration_length: 300,
        };
        for fold in 0..3 {
            let r = run_fold(&s, fold, FrameworkKind::Single, &config(), &settings).unwrap();
            assert_eq!(r.points.len(), 10);
            assert_eq!(r.points.last().unwrap().instance_index, 1200);
            assert!(r.calibrated);
            assert!(r.mean_auc().unwrap() > 0.9);
        }
    }

    #[test]
    fn withheld_fold_never_trains() {
        // all-withheld is impossible, but a fold sees strictly less training than the stream offers
        let s = stream(1000, 2);
        let settings = EvaluationSettings {
            fold_count: 2,
            metric_period: 100,
            window: 200,
            calibration_length: 0,
        };
        let cfg = FrameworkConfig {
            threshold: 1e12,
            ..config()
        };
        let r = run_fold(&s, 0, FrameworkKind::Single, &cfg, &settings).unwrap();
        assert!(!r.calibrated);
        assert_eq!(r.training_counts, vec![(0, 400)]);
    }

    #[test]
    fn reruns_are_identical() {
        let s = stream(900, 3);
        let settings = EvaluationSettings {
            fold_count: 2,
            metric_period: 100,
            window: 100,
            calibration_length: 200,
        };
        let a = run_fold(&s, 1, FrameworkKind::Single, &config(), &settings).unwrap();
        let b = run_fold(&s, 1, FrameworkKind::Single, &config(), &settings).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.threshold, b.threshold);
    }

    #[test]
    fn short_stream_is_rejected() {
        let s = stream(100, 3);
        assert!(run_fold(
            &s,
            0,
            FrameworkKind::Single,
            &config(),
            &EvaluationSettings::default()
        )
        .is_err());
    }
}
