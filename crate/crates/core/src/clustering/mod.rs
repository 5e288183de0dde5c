//! Stream clustering: micro-cluster maintenance, macro clusterings extracted
//! by silhouette-selected k-means, cluster weights and the cluster distance
//! used to hand classifiers from one clustering to the next.

pub mod distance;
pub mod kmeans;
pub mod matching;
pub mod micro;

use alloc::vec::Vec;

pub use distance::{ball_distance, cluster_distance, ClusterDistance, DEFAULT_MC_SAMPLES};
pub use kmeans::{macro_cluster, DEFAULT_K_MAX, DEFAULT_K_MIN};
pub use matching::{match_clusterings, ClusterMatch};
pub use micro::{MicroCluster, MicroClusterPool};

use crate::error::{bail, Result};
use crate::math::euclidean;

/// Smallest radius a macro cluster may have.
pub const MIN_RADIUS: f64 = 1e-6;

/// A hyperspherical cluster with certain (not fuzzy) membership.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroCluster {
    pub id: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Points (decayed micro-cluster weight) assigned to this cluster.
    pub mass: f64,
    pub weight: f64,
}

impl MacroCluster {
    pub fn new(id: usize, center: Vec<f64>, radius: f64, mass: f64, total: f64) -> Result<Self> {
        if !(radius > 0.0) {
            bail!(Contract, "cluster radius must be positive, got {}", radius);
        }
        let weight = if total > 0.0 {
            (mass / total).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Ok(MacroCluster {
            id,
            center,
            radius,
            mass,
            weight,
        })
    }

    /// `max(0, ‖x − center‖ − radius)`.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        (euclidean(x, &self.center) - self.radius).max(0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        euclidean(x, &self.center) <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    clusters: Vec<MacroCluster>,
    total_mass: f64,
    degenerate: bool,
}

impl Clustering {
    pub fn new(mut clusters: Vec<MacroCluster>, total_mass: f64) -> Result<Self> {
        clusters.sort_by_key(|c| c.id);
        if clusters.windows(2).any(|w| w[0].id == w[1].id) {
            bail!(Contract, "cluster ids must be unique");
        }
        let weight_sum: f64 = clusters.iter().map(|c| c.weight).sum();
        if weight_sum > 1.0 + 1e-9 {
            bail!(Contract, "cluster weights sum to {}", weight_sum);
        }
        Ok(Clustering {
            clusters,
            total_mass,
            degenerate: false,
        })
    }

    pub(crate) fn mark_degenerate(mut self) -> Self {
        self.degenerate = true;
        self
    }

    pub fn clusters(&self) -> &[MacroCluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// True when silhouette selection was impossible (all micro-clusters coincide).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn get(&self, id: usize) -> Option<&MacroCluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    /// Clusters whose weight exceeds `1/‖C‖²`; lighter ones are removed.
    pub fn pruned(&self) -> Result<Clustering> {
        let threshold = weight_threshold(self)?;
        Ok(Clustering {
            clusters: self
                .clusters
                .iter()
                .filter(|c| c.weight > threshold)
                .cloned()
                .collect(),
            total_mass: self.total_mass,
            degenerate: self.degenerate,
        })
    }
}

/// Fraction of all clustered points that belong to `cluster`.
pub fn cluster_weight(cluster: &MacroCluster, clustering: &Clustering) -> Result<f64> {
    if !(clustering.total_mass > 0.0) {
        bail!(State, "clustering holds no points");
    }
    Ok(cluster.mass / clustering.total_mass)
}

/// `1 / ‖C‖²`.
pub fn weight_threshold(clustering: &Clustering) -> Result<f64> {
    if clustering.is_empty() {
        bail!(State, "weight threshold of an empty clustering");
    }
    let k = clustering.len() as f64;
    Ok(1.0 / (k * k))
}

/// Cluster minimising `max(0, ‖x − c‖ − r)`; ties go to the lowest id.
pub fn nearest_cluster(clustering: &Clustering, x: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for c in &clustering.clusters {
        crate::error::check_dimension(c.center.len(), x)?;
        let d = c.distance_to(x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c.id, d));
        }
    }
    match best {
        Some(b) => Ok(b),
        None => bail!(State, "nearest cluster in an empty clustering"),
    }
}
