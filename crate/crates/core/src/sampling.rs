//! Context oversampling by SMOTE interpolation, and the minimal window size
//! that holds enough instances of the rarest context with given confidence.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};
use crate::math::{squared_distance, two_sided_normal_quantile};
use crate::rng::seeded;
use crate::stream::{ClassLabel, Instance};

pub const DEFAULT_NEIGHBOURS: usize = 5;
/// Jitter applied when a context holds a single instance.
pub const SINGLETON_JITTER: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct OversampleRequest<'a> {
    /// Real instances of one context.
    pub buffer: &'a [Instance],
    pub neighbours: usize,
    /// Number of instances the context should hold after oversampling.
    pub target: usize,
    pub seed: u64,
}

/// One synthetic point and how it was made.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDraw {
    pub features: Vec<f64>,
    pub parent: usize,
    /// `None` for a jittered copy of a lone instance.
    pub neighbour: Option<usize>,
    pub lambda: f64,
}

/// `target − buffer.len()` synthetic instances (none if there is no deficit),
/// carrying the buffer's context and the majority label.
pub fn smote_generate(request: &OversampleRequest<'_>) -> Result<Vec<Instance>> {
    let Some(first) = request.buffer.first() else {
        bail!(State, "cannot oversample an empty context buffer");
    };
    let context = first.context_id;
    if request.buffer.iter().any(|i| i.context_id != context) {
        bail!(Contract, "oversampling buffer mixes contexts");
    }
    let points: Vec<&[f64]> = request
        .buffer
        .iter()
        .map(|i| i.features.as_slice())
        .collect();
    let deficit = request.target.saturating_sub(points.len());
    Ok(
        smote_points(&points, request.neighbours, deficit, request.seed)?
            .into_iter()
            .map(|s| Instance::labelled(s.features, ClassLabel::Majority, context))
            .collect(),
    )
}

/// `count` SMOTE draws from `points`.
pub fn smote_points(
    points: &[&[f64]],
    neighbours: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SyntheticDraw>> {
    if neighbours == 0 {
        bail!(Config, "SMOTE needs at least one neighbour");
    }
    if points.is_empty() {
        bail!(State, "cannot oversample an empty context buffer");
    }
    let mut rng = seeded(seed);
    let mut out = Vec::with_capacity(count);
    if points.len() == 1 {
        let jitter = Normal::new(0.0, SINGLETON_JITTER).expect("positive jitter");
        for _ in 0..count {
            let features = points[0]
                .iter()
                .map(|v| v + jitter.sample(&mut rng))
                .collect();
            out.push(SyntheticDraw {
                features,
                parent: 0,
                neighbour: None,
                lambda: 0.0,
            });
        }
        return Ok(out);
    }
    let mut knn_cache: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for _ in 0..count {
        let parent = rng.random_range(0..points.len());
        let knn = knn_cache
            .entry(parent)
            .or_insert_with(|| nearest_neighbours(points, parent, neighbours));
        let neighbour = knn[rng.random_range(0..knn.len())];
        let lambda: f64 = rng.random();
        let features = points[parent]
            .iter()
            .zip(points[neighbour])
            .map(|(p, n)| p + lambda * (n - p))
            .collect();
        out.push(SyntheticDraw {
            features,
            parent,
            neighbour: Some(neighbour),
            lambda,
        });
    }
    Ok(out)
}

/// Indices of the `k` points closest to `points[i]` (excluding `i`); ties by index.
fn nearest_neighbours(points: &[&[f64]], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = (0..points.len())
        .filter(|j| *j != i)
        .map(|j| (squared_distance(points[i], points[j]), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.truncate(k);
    others.into_iter().map(|(_, j)| j).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSize {
    pub n: u64,
    /// Whether the normal approximation behind `n` is trustworthy.
    pub lemma_satisfied: bool,
}

/// Smallest `n` with `n·p − x·√(n·p·(1−p)) ≥ τ`, where `p` is the rarest
/// context probability and `Φ(x) − Φ(−x) = confidence`.
pub fn min_window_size(probabilities: &[f64], tau: u64, confidence: f64) -> Result<WindowSize> {
    if !(confidence > 0.0 && confidence < 1.0) {
        bail!(
            Contract,
            "confidence must lie in (0, 1), got {}",
            confidence
        );
    }
    if probabilities.is_empty() || probabilities.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        bail!(Contract, "context probabilities must lie in (0, 1]");
    }
    if probabilities.iter().sum::<f64>() > 1.0 + 1e-9 {
        bail!(Contract, "context probabilities sum above 1");
    }
    if tau == 0 {
        bail!(Contract, "required count must be at least 1");
    }
    let p = probabilities.iter().cloned().fold(f64::INFINITY, f64::min);
    let x = two_sided_normal_quantile(confidence);
    let tau_f = tau as f64;
    let q = p * (1.0 - p);
    let holds = |n: u64| {
        let n = n as f64;
        n * p - x * libm::sqrt(n * q) >= tau_f
    };
    // positive root of p·s² − x·√q·s − τ = 0 with s = √n
    let s = (x * libm::sqrt(q) + libm::sqrt(x * x * q + 4.0 * p * tau_f)) / (2.0 * p);
    let mut n = (libm::ceil(s * s) as u64).max(1);
    while n > 1 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    let nf = n as f64;
    let lemma_satisfied = p < 1.0 && nf > 9.0 * (1.0 - p) / p && nf > 9.0 * p / (1.0 - p);
    Ok(WindowSize { n, lemma_satisfied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ctx_buffer(points: &[[f64; 2]], context: usize) -> Vec<Instance> {
        points
            .iter()
            .map(|p| Instance::new(p.to_vec()).with_context(context))
            .collect()
    }

    #[test]
    fn deficit_count_and_labels() {
        let buf = ctx_buffer(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]], 3);
        let req = OversampleRequest {
            buffer: &buf,
            neighbours: 5,
            target: 10,
            seed: 1,
        };
        let out = smote_generate(&req).unwrap();
        assert_eq!(out.len(), 6);
        assert!(out
            .iter()
            .all(|i| i.context_id == Some(3) && i.class_label == Some(ClassLabel::Majority)));
        let none = smote_generate(&OversampleRequest {
            target: 4,
            ..req.clone()
        })
        .unwrap();
        assert!(none.is_empty());
        assert!(smote_generate(&OversampleRequest { target: 2, ..req })
            .unwrap()
            .is_empty());
    }

    #[test]
    fn midpoint_example() {
        let pts: [&[f64]; 2] = [&[0.0, 0.0], &[2.0, 2.0]];
        for s in smote_points(&pts, 5, 200, 3).unwrap() {
            let expected: Vec<f64> = pts[s.parent]
                .iter()
                .zip(pts[s.neighbour.unwrap()])
                .map(|(p, n)| p + s.lambda * (n - p))
                .collect();
            assert_eq!(s.features, expected);
            assert_eq!(s.features[0], s.features[1]);
        }
        let mid = [0.0, 0.0]
            .iter()
            .zip([2.0, 2.0])
            .map(|(p, n)| p + 0.5 * (n - p))
            .collect::<Vec<f64>>();
        assert_eq!(mid, vec![1.0, 1.0]);
    }

    #[test]
    fn neighbours_come_from_the_k_nearest() {
        let pts: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        for s in smote_points(&refs, 2, 500, 9).unwrap() {
            let gap = (s.parent as i64 - s.neighbour.unwrap() as i64).abs();
            assert!(
                gap == 1 || (gap == 2 && (s.parent <= 1 || s.parent >= 18)),
                "{s:?}"
            );
        }
    }

    #[test]
    fn singleton_and_empty_buffers() {
        let buf = ctx_buffer(&[[0.5, 0.5]], 0);
        let out = smote_generate(&OversampleRequest {
            buffer: &buf,
            neighbours: 5,
            target: 50,
            seed: 2,
        })
        .unwrap();
        assert_eq!(out.len(), 49);
        assert!(out
            .iter()
            .all(|i| i.features.iter().all(|v| (v - 0.5).abs() < 0.01)));
        let empty: Vec<Instance> = Vec::new();
        let err = smote_generate(&OversampleRequest {
            buffer: &empty,
            neighbours: 5,
            target: 5,
            seed: 2,
        });
        assert!(matches!(err, Err(crate::Error::State(_))));
    }

    #[test]
    fn deterministic_under_seed() {
        let buf = ctx_buffer(&[[0.0, 0.3], [1.0, 0.1], [0.4, 1.0]], 1);
        let req = OversampleRequest {
            buffer: &buf,
            neighbours: 5,
            target: 30,
            seed: 4,
        };
        assert_eq!(smote_generate(&req).unwrap(), smote_generate(&req).unwrap());
    }

    #[test]
    fn window_size_examples() {
        assert_eq!(min_window_size(&[0.5, 0.5], 10, 0.95).unwrap().n, 31);
        assert_eq!(min_window_size(&[1.0], 7, 0.9).unwrap().n, 7);
        assert!(!min_window_size(&[1.0], 7, 0.9).unwrap().lemma_satisfied);
        assert!(min_window_size(&[0.5], 10, 1.0).is_err());
        assert!(min_window_size(&[0.5], 10, 0.0).is_err());
    }

    /// Exact binomial lower tail `P(Bin(n, p) ≥ tau)`.
    fn binomial_at_least(n: u64, p: f64, tau: u64) -> f64 {
        let mut log_pmf = n as f64 * libm::log(1.0 - p);
        let mut below = 0.0;
        for k in 0..tau {
            below += libm::exp(log_pmf);
            log_pmf += libm::log((n - k) as f64 / (k + 1) as f64) + libm::log(p / (1.0 - p));
        }
        1.0 - below
    }

    #[test]
    fn example_window_has_the_required_coverage() {
        // the normal approximation is close to the exact binomial tail
        let tail = binomial_at_least(31, 0.5, 10);
        assert!(tail > 0.95, "{tail}");
        assert!(binomial_at_least(25, 0.5, 10) < tail);
    }

    #[test]
    fn monotone_in_each_argument() {
        let n = |p: f64, t: u64, c: f64| min_window_size(&[p], t, c).unwrap().n;
        for t in 1..40 {
            assert!(n(0.2, t, 0.95) <= n(0.2, t + 1, 0.95));
        }
        for i in 1..19 {
            let p = i as f64 / 20.0;
            assert!(n(p, 15, 0.95) >= n(p + 0.05, 15, 0.95));
        }
        for c in [0.5, 0.8, 0.9, 0.95, 0.99] {
            assert!(n(0.3, 20, c) <= n(0.3, 20, (c + 0.999) / 2.0));
        }
    }
}
