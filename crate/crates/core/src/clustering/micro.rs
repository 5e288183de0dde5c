//! Flat pool of decaying micro-clusters (count, linear sum, squared sum).

use alloc::vec::Vec;

use crate::error::{bail, check_dimension, Result};

pub const DEFAULT_CAPACITY: usize = 200;
/// Decay exponent per 1000 time steps: weights shrink by `2^(-λ·Δt/1000)`.
pub const DEFAULT_DECAY: f64 = 0.01;
/// Absorption boundary as a multiple of a micro-cluster's RMS deviation.
pub const BOUNDARY_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct MicroCluster {
    weight: f64,
    points: u64,
    linear_sum: Vec<f64>,
    squared_sum: Vec<f64>,
    last_update: u64,
}

impl MicroCluster {
    fn singleton(x: &[f64], timestamp: u64) -> Self {
        MicroCluster {
            weight: 1.0,
            points: 1,
            linear_sum: x.to_vec(),
            squared_sum: x.iter().map(|v| v * v).collect(),
            last_update: timestamp,
        }
    }

    /// Decayed count as of the last update.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Raw number of absorbed points, ignoring decay.
    pub fn points(&self) -> u64 {
        self.points
    }

    pub fn linear_sum(&self) -> &[f64] {
        &self.linear_sum
    }

    pub fn squared_sum(&self) -> &[f64] {
        &self.squared_sum
    }

    pub fn last_update(&self) -> u64 {
        self.last_update
    }

    pub fn center(&self) -> Vec<f64> {
        self.linear_sum.iter().map(|s| s / self.weight).collect()
    }

    fn squared_distance_to(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.linear_sum)
            .map(|(v, ls)| {
                let diff = v - ls / self.weight;
                diff * diff
            })
            .sum()
    }

    /// Per-dimension variance, clamped at zero.
    pub fn variance(&self) -> Vec<f64> {
        self.linear_sum
            .iter()
            .zip(&self.squared_sum)
            .map(|(ls, ss)| {
                let m = ls / self.weight;
                (ss / self.weight - m * m).max(0.0)
            })
            .collect()
    }

    /// Square root of the summed per-dimension variance.
    pub fn rms_deviation(&self) -> f64 {
        libm::sqrt(self.variance().iter().sum())
    }

    fn decay_to(&mut self, timestamp: u64, lambda: f64) {
        if timestamp > self.last_update {
            let f = decay_factor(timestamp - self.last_update, lambda);
            self.weight *= f;
            self.linear_sum.iter_mut().for_each(|v| *v *= f);
            self.squared_sum.iter_mut().for_each(|v| *v *= f);
            self.last_update = timestamp;
        }
    }

    fn absorb(&mut self, x: &[f64], timestamp: u64, lambda: f64) {
        self.decay_to(timestamp, lambda);
        self.weight += 1.0;
        self.points += 1;
        for (i, v) in x.iter().enumerate() {
            self.linear_sum[i] += v;
            self.squared_sum[i] += v * v;
        }
    }

    fn weight_at(&self, timestamp: u64, lambda: f64) -> f64 {
        self.weight * decay_factor(timestamp.saturating_sub(self.last_update), lambda)
    }
}

fn decay_factor(elapsed: u64, lambda: f64) -> f64 {
    libm::exp2(-lambda * elapsed as f64 / 1000.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroClusterPool {
    dimension: usize,
    capacity: usize,
    decay: f64,
    clusters: Vec<MicroCluster>,
    now: u64,
}

impl MicroClusterPool {
    pub fn new(dimension: usize, capacity: usize, decay: f64) -> Result<Self> {
        if dimension == 0 || capacity == 0 {
            bail!(Config, "micro-cluster pool needs d >= 1 and capacity >= 1");
        }
        if !(decay >= 0.0) {
            bail!(Config, "decay must be non-negative");
        }
        Ok(MicroClusterPool {
            dimension,
            capacity,
            decay,
            clusters: Vec::new(),
            now: 0,
        })
    }

    pub fn with_defaults(dimension: usize) -> Result<Self> {
        Self::new(dimension, DEFAULT_CAPACITY, DEFAULT_DECAY)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[MicroCluster] {
        &self.clusters
    }

    /// Time of the most recent insert.
    pub fn now(&self) -> u64 {
        self.now
    }

    /// Decayed weight of every micro-cluster as of the most recent insert.
    pub fn current_weights(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .map(|c| c.weight_at(self.now, self.decay))
            .collect()
    }

    /// Absorbs `x` into the nearest micro-cluster when it falls inside that
    /// cluster's boundary, otherwise opens a new one (evicting the lightest
    /// micro-cluster when the pool is full).
    pub fn insert(&mut self, x: &[f64], timestamp: u64) -> Result<()> {
        check_dimension(self.dimension, x)?;
        self.now = self.now.max(timestamp);
        let nearest = self
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.squared_distance_to(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, d2)) = nearest {
            let boundary = self.boundary(i);
            if libm::sqrt(d2) <= boundary {
                self.clusters[i].absorb(x, timestamp, self.decay);
                return Ok(());
            }
        }
        if self.clusters.len() == self.capacity {
            let (lightest, _) = self
                .clusters
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.weight_at(timestamp, self.decay)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("pool is full, so non-empty");
            self.clusters.swap_remove(lightest);
        }
        self.clusters.push(MicroCluster::singleton(x, timestamp));
        Ok(())
    }

    /// Boundary radius: a multiple of the RMS deviation, or for a singleton the
    /// distance to the closest other micro-cluster.
    fn boundary(&self, i: usize) -> f64 {
        let c = &self.clusters[i];
        if c.points > 1 {
            return BOUNDARY_FACTOR * c.rms_deviation();
        }
        let center = c.center();
        self.clusters
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| o.squared_distance_to(&center))
            .min_by(f64::total_cmp)
            .map_or(0.0, libm::sqrt)
    }
}
