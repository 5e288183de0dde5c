//! Nearest-neighbour data description over a FIFO neighbourhood.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{AnomalyScore, OneClassClassifier};
use crate::error::{bail, check_dimension, Result};
use crate::math::squared_distance;

pub const DEFAULT_CAPACITY: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 1.0;
/// Score reported when the neighbour's own neighbour coincides with it but `x` does not.
pub const DUPLICATE_NEIGHBOUR_SCORE: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct NeighbourBuffer {
    dimension: usize,
    capacity: usize,
    threshold: f64,
    points: VecDeque<Vec<f64>>,
}

impl NeighbourBuffer {
    pub fn new(dimension: usize, capacity: usize, threshold: f64) -> Result<Self> {
        if dimension == 0 || capacity < 2 {
            bail!(Config, "neighbour buffer needs d >= 1 and capacity >= 2");
        }
        Ok(NeighbourBuffer {
            dimension,
            capacity,
            threshold,
            points: VecDeque::with_capacity(capacity),
        })
    }

    /// Buffer filled from `window` in order; only the newest `capacity` points remain.
    pub fn initialize<'a>(
        window: impl IntoIterator<Item = &'a [f64]>,
        dimension: usize,
        capacity: usize,
        threshold: f64,
    ) -> Result<Self> {
        let mut buffer = Self::new(dimension, capacity, threshold)?;
        for x in window {
            buffer.update(x, true)?;
        }
        if buffer.len() < 2 {
            bail!(
                State,
                "neighbour buffer needs at least 2 points, got {}",
                buffer.len()
            );
        }
        Ok(buffer)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(Vec::as_slice)
    }

    fn nearest(&self, x: &[f64], skip: Option<usize>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let d = squared_distance(x, p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// `‖x − NN(x)‖ / ‖NN(x) − NN(NN(x))‖`, with `NN(NN(x))` excluding `NN(x)` itself.
    pub fn distance_ratio(&self, x: &[f64]) -> Result<f64> {
        check_dimension(self.dimension, x)?;
        if self.points.len() < 2 {
            bail!(
                State,
                "neighbour buffer holds {} points, need at least 2",
                self.points.len()
            );
        }
        let (nn, d_x) = self.nearest(x, None);
        let (_, d_nn) = self.nearest(&self.points[nn], Some(nn));
        let numerator = libm::sqrt(d_x);
        let denominator = libm::sqrt(d_nn);
        Ok(if denominator > 0.0 {
            numerator / denominator
        } else if numerator == 0.0 {
            0.0
        } else {
            DUPLICATE_NEIGHBOUR_SCORE
        })
    }

    /// Score and whether `x` is accepted as normal (`score ≤ threshold`).
    pub fn classify(&self, x: &[f64]) -> Result<(AnomalyScore, bool)> {
        let s = self.distance_ratio(x)?;
        Ok((AnomalyScore::new(s), s <= self.threshold))
    }

    /// Appends `x` (evicting the oldest point when full) iff `believed_normal`.
    pub fn update(&mut self, x: &[f64], believed_normal: bool) -> Result<()> {
        check_dimension(self.dimension, x)?;
        if !believed_normal {
            return Ok(());
        }
        if self.points.len() == self.capacity {
            self.points.pop_front();
        }
        self.points.push_back(x.to_vec());
        Ok(())
    }
}

impl OneClassClassifier for NeighbourBuffer {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn score(&self, x: &[f64]) -> Result<AnomalyScore> {
        self.distance_ratio(x).map(AnomalyScore::new)
    }

    /// Callers gate training on their own verdict, so the point is always accepted.
    fn train(&mut self, x: &[f64]) -> Result<()> {
        self.update(x, true)
    }
}
