//! Streaming half-space trees.
//!
//! Trees are grown from the workspace alone (random attribute, midpoint
//! split) and never restructured. Only the node masses change: each update
//! counts the instance along its root-to-leaf path in the latest window, and
//! every `window_size` updates the latest masses become the reference masses.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{AnomalyScore, OneClassClassifier};
use crate::error::{bail, check_dimension, Result};
use crate::rng::{seeded, StreamRng};

pub const DEFAULT_WINDOW: usize = 500;
pub const DEFAULT_TREES: usize = 5;
pub const DEFAULT_DEPTH: usize = 12;
pub const DEFAULT_SIZE_LIMIT: f64 = 0.1;

/// One full binary tree in heap layout: children of node `i` are `2i+1` and `2i+2`.
#[derive(Clone, Debug, PartialEq)]
struct HalfSpaceTree {
    split_attribute: Vec<u32>,
    split_value: Vec<f64>,
    reference_mass: Vec<u64>,
    latest_mass: Vec<u64>,
}

impl HalfSpaceTree {
    fn grow(depth: usize, workspace: &[(f64, f64)], rng: &mut StreamRng) -> Self {
        let internal = (1usize << depth) - 1;
        let total = (1usize << (depth + 1)) - 1;
        let mut split_attribute = vec![0u32; internal];
        let mut split_value = vec![0.0; internal];
        // Per-node ranges, refined as the tree descends.
        let mut ranges: Vec<Vec<(f64, f64)>> = vec![Vec::new(); internal];
        if internal > 0 {
            ranges[0] = workspace.to_vec();
        }
        for node in 0..internal {
            let r = core::mem::take(&mut ranges[node]);
            let q = rng.random_range(0..workspace.len());
            let mid = 0.5 * (r[q].0 + r[q].1);
            split_attribute[node] = q as u32;
            split_value[node] = mid;
            let (left, right) = (2 * node + 1, 2 * node + 2);
            if left < internal {
                let mut lr = r.clone();
                lr[q].1 = mid;
                let mut rr = r;
                rr[q].0 = mid;
                ranges[left] = lr;
                ranges[right] = rr;
            }
        }
        HalfSpaceTree {
            split_attribute,
            split_value,
            reference_mass: vec![0; total],
            latest_mass: vec![0; total],
        }
    }

    fn is_leaf(&self, node: usize) -> bool {
        node >= self.split_attribute.len()
    }

    fn child(&self, node: usize, x: &[f64]) -> usize {
        if x[self.split_attribute[node] as usize] < self.split_value[node] {
            2 * node + 1
        } else {
            2 * node + 2
        }
    }
}

fn node_depth(node: usize) -> u32 {
    usize::BITS - 1 - (node + 1).leading_zeros()
}

/// Terminal node reached by an instance in one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TerminalNode {
    pub mass: u64,
    pub depth: u32,
}

impl TerminalNode {
    /// `mass × 2^depth`.
    pub fn score(&self) -> f64 {
        self.mass as f64 * libm::ldexp(1.0, self.depth as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceForest {
    dimension: usize,
    depth: usize,
    window_size: usize,
    size_limit: f64,
    trees: Vec<HalfSpaceTree>,
    pending: usize,
}

impl HalfSpaceForest {
    /// Grows `trees` trees of depth `depth` over `workspace` (one `(lo, hi)` per dimension).
    pub fn build(
        trees: usize,
        depth: usize,
        window_size: usize,
        size_limit: f64,
        workspace: &[(f64, f64)],
        seed: u64,
    ) -> Result<Self> {
        if workspace.is_empty() || trees == 0 || depth == 0 || window_size == 0 {
            bail!(
                Config,
                "half-space trees need d >= 1, t >= 1, h >= 1 and a positive window"
            );
        }
        if depth > 24 {
            bail!(Config, "tree depth {} is too large", depth);
        }
        if workspace.iter().any(|(lo, hi)| !(lo < hi)) {
            bail!(Config, "workspace ranges must be non-empty");
        }
        if !(size_limit >= 0.0) {
            bail!(Config, "size limit must be non-negative");
        }
        let mut rng = seeded(seed);
        let trees = (0..trees)
            .map(|_| HalfSpaceTree::grow(depth, workspace, &mut rng))
            .collect();
        Ok(HalfSpaceForest {
            dimension: workspace.len(),
            depth,
            window_size,
            size_limit,
            trees,
            pending: 0,
        })
    }

    /// Randomly perturbed workspace around the unit cube: for each dimension
    /// `s ~ U[0,1]` and the range is `s ± 2·max(s, 1−s)`.
    pub fn random_workspace(dimension: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = seeded(seed);
        (0..dimension)
            .map(|_| {
                let s: f64 = rng.random();
                let half = 2.0 * s.max(1.0 - s);
                (s - half, s + half)
            })
            .collect()
    }

    /// Build on a random workspace, then stream `window` through it.
    pub fn initialize<'a>(
        window: impl IntoIterator<Item = &'a [f64]>,
        dimension: usize,
        trees: usize,
        depth: usize,
        window_size: usize,
        size_limit: f64,
        seed: u64,
    ) -> Result<Self> {
        let workspace = Self::random_workspace(dimension, crate::rng::derive_seed(seed, 1));
        let mut forest = Self::build(trees, depth, window_size, size_limit, &workspace, seed)?;
        let mut seen = 0usize;
        for x in window {
            forest.train(x)?;
            seen += 1;
        }
        // A window shorter than one roll still needs a reference profile.
        if seen > 0 && seen < window_size {
            forest.roll_window();
        }
        Ok(forest)
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Counts `x` along its root-to-leaf path in the latest window of every tree.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        check_dimension(self.dimension, x)?;
        for tree in &mut self.trees {
            let mut node = 0;
            loop {
                tree.latest_mass[node] += 1;
                if tree.is_leaf(node) {
                    break;
                }
                node = tree.child(node, x);
            }
        }
        Ok(())
    }

    /// Latest masses become reference masses; latest masses reset to zero.
    pub fn roll_window(&mut self) {
        for tree in &mut self.trees {
            core::mem::swap(&mut tree.reference_mass, &mut tree.latest_mass);
            tree.latest_mass.iter_mut().for_each(|m| *m = 0);
        }
        self.pending = 0;
    }

    /// Terminal node of `x` in tree `tree`: the first node whose reference mass
    /// is below `size_limit × window_size`, or the leaf.
    pub fn terminal(&self, tree: usize, x: &[f64]) -> Result<TerminalNode> {
        check_dimension(self.dimension, x)?;
        let limit = self.size_limit * self.window_size as f64;
        let t = &self.trees[tree];
        let mut node = 0;
        while !t.is_leaf(node) && (t.reference_mass[node] as f64) >= limit {
            node = t.child(node, x);
        }
        Ok(TerminalNode {
            mass: t.reference_mass[node],
            depth: node_depth(node),
        })
    }

    /// Summed terminal-node mass. Larger means more normal.
    pub fn mass_score(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for tree in 0..self.trees.len() {
            total += self.terminal(tree, x)?.score();
        }
        Ok(total)
    }

    /// Reference masses of the leaves of one tree.
    pub fn leaf_reference_masses(&self, tree: usize) -> &[u64] {
        let t = &self.trees[tree];
        &t.reference_mass[t.split_attribute.len()..]
    }

    pub fn root_reference_mass(&self, tree: usize) -> u64 {
        self.trees[tree].reference_mass[0]
    }

    /// Split attribute and value for each internal node of one tree, in heap order.
    pub fn splits(&self, tree: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let t = &self.trees[tree];
        t.split_attribute
            .iter()
            .map(|a| *a as usize)
            .zip(t.split_value.iter().copied())
    }
}

impl OneClassClassifier for HalfSpaceForest {
    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Negated mass so that larger scores are more anomalous.
    fn score(&self, x: &[f64]) -> Result<AnomalyScore> {
        Ok(AnomalyScore::new(-self.mass_score(x)?))
    }

    fn train(&mut self, x: &[f64]) -> Result<()> {
        self.update(x)?;
        self.pending += 1;
        if self.pending == self.window_size {
            self.roll_window();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); d]
    }

    #[test]
    fn depth_one_has_two_leaves() {
        let f = HalfSpaceForest::build(3, 1, 10, 0.1, &unit(2), 1).unwrap();
        for t in 0..3 {
            assert_eq!(f.leaf_reference_masses(t).len(), 2);
            assert_eq!(f.splits(t).count(), 1);
        }
    }

    #[test]
    fn default_settings_give_five_depth_twelve_trees() {
        let f = HalfSpaceForest::build(
            DEFAULT_TREES,
            DEFAULT_DEPTH,
            DEFAULT_WINDOW,
            DEFAULT_SIZE_LIMIT,
            &unit(4),
            7,
        )
        .unwrap();
        assert_eq!(f.tree_count(), 5);
        for t in 0..5 {
            assert_eq!(f.leaf_reference_masses(t).len(), 1 << 12);
        }
        // every leaf index sits at depth 12
        assert_eq!(node_depth((1 << 12) - 1), 12);
        assert_eq!(node_depth((1 << 13) - 2), 12);
    }

    #[test]
    fn same_seed_same_splits() {
        let a = HalfSpaceForest::build(2, 6, 10, 0.1, &unit(3), 5).unwrap();
        let b = HalfSpaceForest::build(2, 6, 10, 0.1, &unit(3), 5).unwrap();
        assert_eq!(a, b);
        let c = HalfSpaceForest::build(2, 6, 10, 0.1, &unit(3), 6).unwrap();
        assert_ne!(
            a.splits(0).collect::<Vec<_>>(),
            c.splits(0).collect::<Vec<_>>()
        );
    }

    #[test]
    fn splits_are_midpoints_of_node_ranges() {
        let f = HalfSpaceForest::build(1, 3, 10, 0.1, &[(0.0, 8.0)], 3).unwrap();
        let splits: Vec<f64> = f.splits(0).map(|s| s.1).collect();
        assert_eq!(splits, vec![4.0, 2.0, 6.0, 1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn terminal_mass_formula() {
        // 3 identical updates, limit 0.1·10 = 1, so traversal reaches the depth-2 leaf.
        let mut f = HalfSpaceForest::build(1, 2, 10, 0.1, &unit(1), 1).unwrap();
        for _ in 0..3 {
            f.update(&[0.3]).unwrap();
        }
        f.roll_window();
        let t = f.terminal(0, &[0.3]).unwrap();
        assert_eq!(t, TerminalNode { mass: 3, depth: 2 });
        assert_eq!(f.mass_score(&[0.3]).unwrap(), 12.0);
        assert_eq!(f.score(&[0.3]).unwrap().value(), -12.0);
    }

    #[test]
    fn two_tree_masses_sum() {
        let t1 = TerminalNode { mass: 3, depth: 2 };
        let t2 = TerminalNode { mass: 1, depth: 3 };
        assert_eq!(t1.score() + t2.score(), 20.0);
    }

    #[test]
    fn empty_model_scores_zero() {
        let f = HalfSpaceForest::build(4, 5, 10, 0.1, &unit(2), 1).unwrap();
        assert_eq!(f.mass_score(&[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(f.score(&[0.5, 0.5]).unwrap().value(), 0.0);
    }

    #[test]
    fn single_update_and_roll() {
        let mut f = HalfSpaceForest::build(2, 4, 10, 0.1, &unit(2), 2).unwrap();
        f.update(&[0.2, 0.9]).unwrap();
        f.roll_window();
        for t in 0..2 {
            let leaves = f.leaf_reference_masses(t);
            assert_eq!(leaves.iter().filter(|m| **m == 1).count(), 1);
            assert_eq!(leaves.iter().sum::<u64>(), 1);
        }
    }

    #[test]
    fn window_of_identical_updates_fills_root() {
        let mut f = HalfSpaceForest::build(3, 4, 25, 0.1, &unit(2), 2).unwrap();
        for _ in 0..25 {
            f.train(&[0.4, 0.4]).unwrap();
        }
        // train rolled automatically at the 25th update
        for t in 0..3 {
            assert_eq!(f.root_reference_mass(t), 25);
        }
    }

    #[test]
    fn dense_cluster_beats_far_outlier() {
        let mut f = HalfSpaceForest::initialize(
            core::iter::empty(),
            2,
            DEFAULT_TREES,
            8,
            100,
            DEFAULT_SIZE_LIMIT,
            11,
        )
        .unwrap();
        let mut rng = seeded(3);
        for _ in 0..300 {
            let x = [
                0.3 + 0.05 * rng.random::<f64>(),
                0.6 + 0.05 * rng.random::<f64>(),
            ];
            f.train(&x).unwrap();
        }
        let inlier = f.mass_score(&[0.32, 0.62]).unwrap();
        let outlier = f.mass_score(&[0.95, 0.05]).unwrap();
        assert!(inlier > outlier, "{inlier} vs {outlier}");
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(HalfSpaceForest::build(0, 3, 10, 0.1, &unit(2), 1).is_err());
        assert!(HalfSpaceForest::build(1, 0, 10, 0.1, &unit(2), 1).is_err());
        assert!(HalfSpaceForest::build(1, 3, 10, 0.1, &[], 1).is_err());
        let f = HalfSpaceForest::build(1, 3, 10, 0.1, &unit(2), 1).unwrap();
        assert!(matches!(f.score(&[0.1]), Err(crate::Error::Contract(_))));
    }
}
