//! Prequential evaluation: sliding-window AUC, confusion counts and g-mean,
//! Informedness threshold selection, stream cross-validation and the
//! correlated Bayesian t-test used to compare methods across folds.
//!
//! The minority class is the positive class everywhere. A prediction is
//! positive when the anomaly score exceeds the threshold.

pub mod cbtt;
pub mod crossval;

use alloc::collections::VecDeque;
use alloc::vec::Vec;

pub use cbtt::{correlated_bayesian_t_test, PosteriorSummary, DEFAULT_ROPE};
pub use crossval::{run_fold, EvaluationSettings, FoldResult, MetricPoint};

use crate::error::{bail, Result};

pub const DEFAULT_WINDOW: usize = 500;

/// One scored instance: anomaly score and whether it truly is a minority instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredTruth {
    pub score: f64,
    pub minority: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationWindow {
    capacity: usize,
    pairs: VecDeque<ScoredTruth>,
}

impl EvaluationWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            bail!(Config, "evaluation window capacity must be at least 1");
        }
        Ok(EvaluationWindow {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, score: f64, minority: bool) {
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(ScoredTruth { score, minority });
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pairs(&self) -> impl Iterator<Item = &ScoredTruth> {
        self.pairs.iter()
    }

    pub fn auc(&self) -> Option<f64> {
        auc(self.pairs.iter().copied())
    }
}

/// Area under the ROC curve (Mann–Whitney U over minority/majority pairs,
/// ties counting one half). `None` unless both classes are present.
pub fn auc(pairs: impl IntoIterator<Item = ScoredTruth>) -> Option<f64> {
    let mut sorted: Vec<ScoredTruth> = pairs.into_iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let positives = sorted.iter().filter(|p| p.minority).count() as u64;
    let negatives = sorted.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    // twice U, kept integral so the result is exact
    let mut doubled: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            if sorted[j].minority {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        doubled += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    Some(doubled as f64 / (2 * positives * negatives) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    /// Counts for `pairs` with the positive prediction `score > threshold`.
    pub fn at_threshold<'a>(
        pairs: impl IntoIterator<Item = &'a ScoredTruth>,
        threshold: f64,
    ) -> Self {
        let mut cm = ConfusionMatrix::default();
        for p in pairs {
            match (p.score > threshold, p.minority) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fn_ += 1,
            }
        }
        cm
    }

    /// Minority recall.
    pub fn sensitivity(&self) -> Option<f64> {
        let p = self.tp + self.fn_;
        (p > 0).then(|| self.tp as f64 / p as f64)
    }

    pub fn specificity(&self) -> Option<f64> {
        let n = self.tn + self.fp;
        (n > 0).then(|| self.tn as f64 / n as f64)
    }

    pub fn g_mean(&self) -> Option<f64> {
        Some(g_mean(self.sensitivity()?, self.specificity()?))
    }
}

/// `√(sensitivity · specificity)`.
pub fn g_mean(sensitivity: f64, specificity: f64) -> f64 {
    libm::sqrt(sensitivity * specificity)
}

/// Threshold maximising Informedness on one window, among midpoints of
/// adjacent distinct scores (ties resolved toward the smaller threshold).
/// `None` when the window lacks a class or has a single distinct score.
pub fn window_informedness_threshold(pairs: &[ScoredTruth]) -> Option<f64> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let positives = sorted.iter().filter(|p| p.minority).count() as i128;
    let negatives = sorted.len() as i128 - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    // J·P·N = TP·N − FP·P, compared exactly in integers
    let (mut tp, mut fp) = (positives, negatives);
    let mut best: Option<(i128, f64)> = None;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            if sorted[j].minority {
                tp -= 1;
            } else {
                fp -= 1;
            }
            j += 1;
        }
        if j < sorted.len() {
            let tau = 0.5 * (sorted[i].score + sorted[j].score);
            let j_scaled = tp * negatives - fp * positives;
            if best.is_none_or(|(b, _)| j_scaled > b) {
                best = Some((j_scaled, tau));
            }
        }
        i = j;
    }
    best.map(|(_, tau)| tau)
}

/// Mean of the per-window Informedness optima over every usable window.
pub fn informedness_threshold<'a>(
    windows: impl IntoIterator<Item = &'a [ScoredTruth]>,
) -> Result<f64> {
    let optima: Vec<f64> = windows
        .into_iter()
        .filter_map(window_informedness_threshold)
        .collect();
    if optima.is_empty() {
        bail!(State, "no evaluation window contains both classes");
    }
    Ok(optima.iter().sum::<f64>() / optima.len() as f64)
}
