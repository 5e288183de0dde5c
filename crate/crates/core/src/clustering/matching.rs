//! Hands classifiers from an old clustering to a new one.

use alloc::vec::Vec;

use super::distance::{cluster_distance, DEFAULT_MC_SAMPLES};
use super::Clustering;
use crate::error::{bail, Result};
use crate::framework::ContextModelSet;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMatch<M> {
    /// The new clustering with light clusters pruned.
    pub clustering: Clustering,
    /// Classifiers inherited by surviving new clusters, keyed by new id.
    pub models: ContextModelSet<M>,
    /// Surviving new clusters that matched no old cluster.
    pub needs_new: Vec<usize>,
    /// `(new id, closest old id, normalized distance)` for each survivor.
    pub links: Vec<(usize, Option<usize>, f64)>,
}

/// Each surviving new cluster inherits the classifier of the old cluster at
/// the smallest normalized distance when that distance is below `threshold`.
pub fn match_clusterings<M: Clone>(
    old: &Clustering,
    new: &Clustering,
    threshold: f64,
    classifiers: &ContextModelSet<M>,
    seed: u64,
) -> Result<ClusterMatch<M>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        bail!(
            Config,
            "movement threshold must lie in (0, 1], got {}",
            threshold
        );
    }
    let survivors = if new.is_empty() {
        new.clone()
    } else {
        new.pruned()?
    };
    let mut models = ContextModelSet::new();
    let mut needs_new = Vec::new();
    let mut links = Vec::new();
    for fresh in survivors.clusters() {
        let mut best: Option<(usize, f64)> = None;
        for prior in old.clusters() {
            let s = derive_seed(seed, ((prior.id as u64) << 32) ^ fresh.id as u64);
            let d = cluster_distance(prior, fresh, DEFAULT_MC_SAMPLES, s)?.normalized;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((prior.id, d));
            }
        }
        links.push((fresh.id, best.map(|b| b.0), best.map_or(1.0, |b| b.1)));
        match best
            .and_then(|(id, d)| (d < threshold).then_some(id))
            .and_then(|id| classifiers.get(id))
        {
            Some(model) => {
                models.insert(fresh.id, model.clone());
            }
            None => needs_new.push(fresh.id),
        }
    }
    Ok(ClusterMatch {
        clustering: survivors,
        models,
        needs_new,
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::MacroCluster;
    use alloc::vec;

    fn clustering(specs: &[(Vec<f64>, f64, f64)]) -> Clustering {
        let clusters = specs
            .iter()
            .enumerate()
            .map(|(id, (c, r, m))| MacroCluster::new(id, c.clone(), *r, *m, 100.0).unwrap())
            .collect();
        Clustering::new(clusters, 100.0).unwrap()
    }

    fn models(ids: &[usize]) -> ContextModelSet<&'static str> {
        let names = ["m0", "m1", "m2", "m3"];
        let mut set = ContextModelSet::new();
        for id in ids {
            set.insert(*id, names[*id]);
        }
        set
    }

    #[test]
    fn identical_clustering_inherits_everything() {
        let c = clustering(&[(vec![0.0, 0.0], 1.0, 50.0), (vec![5.0, 5.0], 1.0, 50.0)]);
        let m = match_clusterings(&c, &c, 0.2, &models(&[0, 1]), 1).unwrap();
        assert!(m.needs_new.is_empty());
        assert_eq!(m.models.get(0), Some(&"m0"));
        assert_eq!(m.models.get(1), Some(&"m1"));
    }

    #[test]
    fn disjoint_cluster_needs_a_new_classifier() {
        let old = clustering(&[(vec![0.0, 0.0], 1.0, 50.0), (vec![5.0, 5.0], 1.0, 50.0)]);
        let new = clustering(&[(vec![0.0, 0.0], 1.0, 50.0), (vec![20.0, -9.0], 1.0, 50.0)]);
        let m = match_clusterings(&old, &new, 0.2, &models(&[0, 1]), 1).unwrap();
        assert_eq!(m.needs_new, vec![1]);
        assert_eq!(m.links[1].2, 1.0);
    }

    #[test]
    fn small_shift_is_inherited_and_sharing_is_allowed() {
        let old = clustering(&[(vec![0.0, 0.0], 1.0, 100.0)]);
        let new = clustering(&[(vec![0.1, 0.0], 1.0, 50.0), (vec![-0.1, 0.0], 1.0, 50.0)]);
        let m = match_clusterings(&old, &new, 0.2, &models(&[0]), 1).unwrap();
        assert!(m.needs_new.is_empty());
        assert_eq!(m.models.get(0), Some(&"m0"));
        assert_eq!(m.models.get(1), Some(&"m0"));
    }

    #[test]
    fn light_new_clusters_are_pruned() {
        let old = clustering(&[(vec![0.0, 0.0], 1.0, 100.0)]);
        let new = clustering(&[(vec![0.0, 0.0], 1.0, 95.0), (vec![9.0, 0.0], 1.0, 5.0)]);
        let m = match_clusterings(&old, &new, 0.2, &models(&[0]), 1).unwrap();
        assert_eq!(m.clustering.len(), 1);
        assert!(m.needs_new.is_empty());
    }

    #[test]
    fn threshold_outside_unit_interval() {
        let c = clustering(&[(vec![0.0], 1.0, 100.0)]);
        assert!(match_clusterings(&c, &c, 0.0, &models(&[0]), 1).is_err());
        assert!(match_clusterings(&c, &c, 1.5, &models(&[0]), 1).is_err());
    }
}
