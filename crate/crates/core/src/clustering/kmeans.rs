//! Macro clusters from micro-cluster centers: weighted k-means for every k in
//! a range, with the winner chosen by mean silhouette.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::micro::MicroClusterPool;
use super::{Clustering, MacroCluster, MIN_RADIUS};
use crate::error::{bail, Result};
use crate::math::{euclidean, squared_distance};
use crate::rng::{derive_seed, seeded, StreamRng};

pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 8;
const RESTARTS: u64 = 4;
const MAX_ITERATIONS: usize = 100;

/// A weighted point handed to the macro clusterer.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCenter {
    pub center: Vec<f64>,
    pub weight: f64,
    /// Spread of the points summarised by this center.
    pub rms: f64,
}

/// Clusters the current micro-clusters of `pool`.
pub fn macro_cluster(
    pool: &MicroClusterPool,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<Clustering> {
    let weights = pool.current_weights();
    let points: Vec<WeightedCenter> = pool
        .clusters()
        .iter()
        .zip(weights)
        .map(|(mc, weight)| WeightedCenter {
            center: mc.center(),
            weight,
            rms: mc.rms_deviation(),
        })
        .collect();
    cluster_centers(&points, k_min, k_max, seed)
}

/// Silhouette-selected weighted k-means over `points`.
pub fn cluster_centers(
    points: &[WeightedCenter],
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<Clustering> {
    if k_min == 0 || k_max < k_min {
        bail!(Config, "invalid k range [{}, {}]", k_min, k_max);
    }
    if points.len() < k_min {
        bail!(
            State,
            "{} micro-clusters cannot form {} macro clusters",
            points.len(),
            k_min
        );
    }
    let total: f64 = points.iter().map(|p| p.weight).sum();
    let distinct = count_distinct(points);
    if distinct == 1 {
        let labels: Vec<usize> = (0..points.len()).map(|i| i % k_min).collect();
        return Ok(build(points, &labels, k_min, total)?.mark_degenerate());
    }
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    for k in k_min..=k_max.min(distinct) {
        let labels = weighted_kmeans(points, k, derive_seed(seed, k as u64));
        let s = mean_silhouette(points, &labels, k);
        if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
            best = Some((s, labels, k));
        }
    }
    match best {
        Some((_, labels, k)) => build(points, &labels, k, total),
        // fewer distinct centers than k_min
        None => {
            let labels = weighted_kmeans(points, k_min, derive_seed(seed, k_min as u64));
            build(points, &labels, k_min, total)
        }
    }
}

fn count_distinct(points: &[WeightedCenter]) -> usize {
    let mut distinct: Vec<&[f64]> = Vec::new();
    for p in points {
        if !distinct.iter().any(|d| *d == p.center.as_slice()) {
            distinct.push(&p.center);
        }
    }
    distinct.len()
}

fn build(points: &[WeightedCenter], labels: &[usize], k: usize, total: f64) -> Result<Clustering> {
    let d = points[0].center.len();
    let mut clusters = Vec::with_capacity(k);
    for id in 0..k {
        let members: Vec<&WeightedCenter> = points
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == id)
            .map(|(p, _)| p)
            .collect();
        let mass: f64 = members.iter().map(|p| p.weight).sum();
        let center = weighted_mean(members.iter().copied(), d);
        let radius = members
            .iter()
            .map(|p| euclidean(&center, &p.center) + p.rms)
            .fold(0.0, f64::max)
            .max(MIN_RADIUS);
        clusters.push(MacroCluster::new(id, center, radius, mass, total)?);
    }
    Clustering::new(clusters, total)
}

fn weighted_mean<'a>(
    members: impl Iterator<Item = &'a WeightedCenter> + Clone,
    d: usize,
) -> Vec<f64> {
    let mut sum = vec![0.0; d];
    let mut w = 0.0;
    let mut count = 0usize;
    for p in members.clone() {
        w += p.weight;
        count += 1;
        for (s, v) in sum.iter_mut().zip(&p.center) {
            *s += p.weight * v;
        }
    }
    if w > 0.0 {
        sum.iter_mut().for_each(|s| *s /= w);
        sum
    } else if count > 0 {
        // all members fully decayed: plain average
        let mut plain = vec![0.0; d];
        for p in members {
            for (s, v) in plain.iter_mut().zip(&p.center) {
                *s += v / count as f64;
            }
        }
        plain
    } else {
        sum
    }
}

/// Best of several k-means++ seeded Lloyd runs, by weighted within-cluster sum of squares.
fn weighted_kmeans(points: &[WeightedCenter], k: usize, seed: u64) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..RESTARTS {
        let mut rng = seeded(derive_seed(seed, restart));
        let labels = lloyd(points, plus_plus(points, k, &mut rng));
        let cost = within_cost(points, &labels);
        if best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
            best = Some((cost, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn effective_weight(p: &WeightedCenter) -> f64 {
    // fully decayed micro-clusters still take part in seeding
    p.weight.max(1e-12)
}

fn plus_plus(points: &[WeightedCenter], k: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let weights: Vec<f64> = points.iter().map(effective_weight).collect();
    centers.push(points[sample_index(&weights, rng)].center.clone());
    while centers.len() < k {
        let scores: Vec<f64> = points
            .iter()
            .zip(&weights)
            .map(|(p, w)| {
                w * centers
                    .iter()
                    .map(|c| squared_distance(&p.center, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let next = if scores.iter().sum::<f64>() > 0.0 {
            sample_index(&scores, rng)
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[next].center.clone());
    }
    centers
}

fn sample_index(weights: &[f64], rng: &mut StreamRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn nearest_center(x: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn lloyd(points: &[WeightedCenter], mut centers: Vec<Vec<f64>>) -> Vec<usize> {
    let d = points[0].center.len();
    let mut labels: Vec<usize> = points
        .iter()
        .map(|p| nearest_center(&p.center, &centers))
        .collect();
    for _ in 0..MAX_ITERATIONS {
        for (id, c) in centers.iter_mut().enumerate() {
            let members = points
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == id)
                .map(|(p, _)| p);
            if members.clone().next().is_some() {
                *c = weighted_mean(members, d);
            }
        }
        let next: Vec<usize> = points
            .iter()
            .map(|p| nearest_center(&p.center, &centers))
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

fn within_cost(points: &[WeightedCenter], labels: &[usize]) -> f64 {
    let d = points[0].center.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    (0..k)
        .map(|id| {
            let members = points
                .iter()
                .zip(labels)
                .filter(|(_, l)| **l == id)
                .map(|(p, _)| p);
            let c = weighted_mean(members.clone(), d);
            members
                .map(|p| effective_weight(p) * squared_distance(&p.center, &c))
                .sum::<f64>()
        })
        .sum()
}

/// Weight-averaged silhouette; members of singleton clusters score 0.
pub fn mean_silhouette(points: &[WeightedCenter], labels: &[usize], k: usize) -> f64 {
    let n = points.len();
    let mut weighted_sum = 0.0;
    let mut weight_total = 0.0;
    for i in 0..n {
        let mut dist_sum = vec![0.0; k];
        let mut mass = vec![0.0; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = effective_weight(&points[j]);
            dist_sum[labels[j]] += w * euclidean(&points[i].center, &points[j].center);
            mass[labels[j]] += w;
        }
        let own = labels[i];
        let s = if mass[own] == 0.0 {
            0.0
        } else {
            let a = dist_sum[own] / mass[own];
            let b = (0..k)
                .filter(|c| *c != own && mass[*c] > 0.0)
                .map(|c| dist_sum[c] / mass[c])
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                0.0
            } else if a.max(b) > 0.0 {
                (b - a) / a.max(b)
            } else {
                0.0
            }
        };
        let w = effective_weight(&points[i]);
        weighted_sum += w * s;
        weight_total += w;
    }
    if weight_total > 0.0 {
        weighted_sum / weight_total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn wc(center: Vec<f64>, weight: f64) -> WeightedCenter {
        WeightedCenter {
            center,
            weight,
            rms: 0.1,
        }
    }

    #[test]
    fn forced_k_on_two_points() {
        let pts = [wc(vec![0.0, 0.0], 3.0), wc(vec![10.0, 10.0], 1.0)];
        let c = cluster_centers(&pts, 2, 2, 1).unwrap();
        assert_eq!(c.len(), 2);
        let mut centers: Vec<Vec<f64>> = c.clusters().iter().map(|m| m.center.clone()).collect();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(centers, vec![vec![0.0, 0.0], vec![10.0, 10.0]]);
        let weights: Vec<f64> = c.clusters().iter().map(|m| m.weight).collect();
        assert!(weights.contains(&0.75) && weights.contains(&0.25));
        assert!(!c.is_degenerate());
    }

    #[test]
    fn identical_centers_are_degenerate() {
        let pts: Vec<_> = (0..6).map(|_| wc(vec![1.0, 1.0], 1.0)).collect();
        let c = cluster_centers(&pts, 2, 8, 3).unwrap();
        assert!(c.is_degenerate());
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn too_few_micro_clusters() {
        let pts = [wc(vec![0.0], 1.0)];
        assert!(matches!(
            cluster_centers(&pts, 2, 8, 0),
            Err(crate::Error::State(_))
        ));
    }

    fn blobs(seed: u64) -> (Vec<WeightedCenter>, Vec<usize>) {
        let mut rng = seeded(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let means = [[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]];
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (g, m) in means.iter().enumerate() {
            for _ in 0..15 {
                let c = vec![m[0] + noise.sample(&mut rng), m[1] + noise.sample(&mut rng)];
                pts.push(wc(c, rng.random_range(1.0..5.0)));
                truth.push(g);
            }
        }
        (pts, truth)
    }

    /// Silhouette written out directly from its definition, one point at a time.
    fn brute_silhouette(pts: &[WeightedCenter], labels: &[usize]) -> f64 {
        let k = labels.iter().max().unwrap() + 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..pts.len() {
            let mean_to = |c: usize| {
                let (mut s, mut w) = (0.0, 0.0);
                for j in 0..pts.len() {
                    if j != i && labels[j] == c {
                        let dx = pts[i].center[0] - pts[j].center[0];
                        let dy = pts[i].center[1] - pts[j].center[1];
                        s += pts[j].weight * (dx * dx + dy * dy).sqrt();
                        w += pts[j].weight;
                    }
                }
                (w > 0.0).then(|| s / w)
            };
            let a = mean_to(labels[i]);
            let b = (0..k)
                .filter(|c| *c != labels[i])
                .filter_map(mean_to)
                .fold(f64::INFINITY, f64::min);
            let s = match a {
                Some(a) => (b - a) / a.max(b),
                None => 0.0,
            };
            num += pts[i].weight * s;
            den += pts[i].weight;
        }
        num / den
    }

    #[test]
    fn silhouette_selects_three_blobs() {
        let (pts, truth) = blobs(11);
        // oracle: the true partition has the best silhouette over k = 2..5
        let oracle_best = (2..=5)
            .map(|k| {
                (
                    k,
                    brute_silhouette(&pts, &weighted_kmeans(&pts, k, k as u64)),
                )
            })
            .fold(
                (0, f64::NEG_INFINITY),
                |b, (k, s)| if s > b.1 { (k, s) } else { b },
            );
        assert_eq!(oracle_best.0, 3);
        assert!((brute_silhouette(&pts, &truth) - mean_silhouette(&pts, &truth, 3)).abs() < 1e-12);
        let c = cluster_centers(&pts, 2, 5, 7).unwrap();
        assert_eq!(c.len(), 3);
        // each blob's members land in a single macro cluster
        for g in 0..3 {
            let ids: Vec<usize> = pts
                .iter()
                .zip(&truth)
                .filter(|(_, t)| **t == g)
                .map(|(p, _)| super::super::nearest_cluster(&c, &p.center).unwrap().0)
                .collect();
            assert!(ids.iter().all(|i| *i == ids[0]));
        }
    }

    #[test]
    fn radius_covers_members() {
        let (pts, _) = blobs(5);
        let c = cluster_centers(&pts, 2, 5, 1).unwrap();
        for p in &pts {
            assert!(c
                .clusters()
                .iter()
                .any(|m| euclidean(&m.center, &p.center) + p.rms <= m.radius + 1e-12));
        }
        let sum: f64 = c.clusters().iter().map(|m| m.weight).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_under_seed() {
        let (pts, _) = blobs(2);
        assert_eq!(
            cluster_centers(&pts, 2, 6, 9).unwrap(),
            cluster_centers(&pts, 2, 6, 9).unwrap()
        );
    }

    #[test]
    fn pool_round_trip() {
        let mut pool = MicroClusterPool::with_defaults(2).unwrap();
        let mut rng = seeded(4);
        let noise = Normal::new(0.0, 0.2).unwrap();
        for t in 0..2000u64 {
            let m = if t % 2 == 0 { 0.0 } else { 6.0 };
            pool.insert(&[m + noise.sample(&mut rng), m + noise.sample(&mut rng)], t)
                .unwrap();
        }
        let c = macro_cluster(&pool, 2, 8, 1).unwrap();
        assert_eq!(c.len(), 2);
        for m in c.clusters() {
            assert!((m.weight - 0.5).abs() < 0.05, "weight {}", m.weight);
        }
    }
}
