//! Stream instances and the deterministic synthetic generators.
//!
//! A stream is any `Iterator<Item = Instance>`. The generators here are
//! infinite; callers take as many instances as they need.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};
use crate::math::squared_distance;
use crate::rng::{seeded, StreamRng};

/// Number of recent majority instances used to place minority instances in a context.
pub const MINORITY_REFERENCE_WINDOW: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Majority,
    Minority,
}

/// One stream object: features plus the optional class label and context.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub class_label: Option<ClassLabel>,
    pub context_id: Option<usize>,
}

impl Instance {
    pub fn new(features: Vec<f64>) -> Self {
        Instance {
            features,
            class_label: None,
            context_id: None,
        }
    }

    pub fn labelled(
        features: Vec<f64>,
        class_label: ClassLabel,
        context_id: Option<usize>,
    ) -> Self {
        Instance {
            features,
            class_label: Some(class_label),
            context_id,
        }
    }

    pub fn with_context(mut self, context_id: usize) -> Self {
        self.context_id = Some(context_id);
        self
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }

    pub fn is_minority(&self) -> bool {
        self.class_label == Some(ClassLabel::Minority)
    }

    /// Checks finiteness, dimension and context range.
    pub fn validate(&self, dimension: usize, context_count: Option<usize>) -> Result<()> {
        crate::error::check_dimension(dimension, &self.features)?;
        crate::error::check_finite(&self.features)?;
        if let (Some(c), Some(j)) = (self.context_id, context_count) {
            if c >= j {
                bail!(Contract, "context id {} out of range for {} contexts", c, j);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamDescriptor {
    pub dimension: usize,
    pub context_probabilities: Vec<f64>,
    pub minority_fraction: f64,
    pub seed: u64,
}

impl StreamDescriptor {
    pub fn context_count(&self) -> usize {
        self.context_probabilities.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            bail!(Config, "stream dimension must be at least 1");
        }
        if self.context_probabilities.is_empty() {
            bail!(Config, "at least one context probability is required");
        }
        if self
            .context_probabilities
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            bail!(Config, "context probabilities must lie in [0, 1]");
        }
        let total: f64 = self.context_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            bail!(Config, "context probabilities sum to {}, expected 1", total);
        }
        if !(0.0..=1.0).contains(&self.minority_fraction) {
            bail!(
                Config,
                "minority fraction {} outside [0, 1]",
                self.minority_fraction
            );
        }
        Ok(())
    }
}

/// A multivariate normal with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct MvndComponent {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
}

impl MvndComponent {
    pub fn new(mean: Vec<f64>, std_dev: Vec<f64>) -> Result<Self> {
        if mean.len() != std_dev.len() {
            bail!(Config, "mean and standard deviation lengths differ");
        }
        if std_dev.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            bail!(Config, "standard deviations must be positive");
        }
        Ok(MvndComponent { mean, std_dev })
    }

    /// Isotropic component with the same deviation in every dimension.
    pub fn isotropic(mean: Vec<f64>, std_dev: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, alloc::vec![std_dev; d])
    }

    fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std_dev)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbfCentroid {
    pub center: Vec<f64>,
    pub radius: f64,
    pub weight: f64,
}

impl RbfCentroid {
    pub fn new(center: Vec<f64>, radius: f64, weight: f64) -> Result<Self> {
        if !(radius > 0.0) || !(weight > 0.0) {
            bail!(Config, "centroid radius and weight must be positive");
        }
        Ok(RbfCentroid {
            center,
            radius,
            weight,
        })
    }

    fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let d = self.center.len();
        let mut direction: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let mut norm = libm::sqrt(direction.iter().map(|v| v * v).sum::<f64>());
        while norm == 0.0 {
            direction = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            norm = libm::sqrt(direction.iter().map(|v| v * v).sum::<f64>());
        }
        let u: f64 = rng.random();
        let r = self.radius * libm::pow(u, 1.0 / d as f64);
        self.center
            .iter()
            .zip(direction)
            .map(|(c, v)| c + r * v / norm)
            .collect()
    }
}

/// Context of the Euclidean-nearest majority instance; ties go to the lowest context id.
pub fn assign_minority_context(minority: &Instance, recent_majority: &[Instance]) -> Result<usize> {
    nearest_context(
        &minority.features,
        recent_majority
            .iter()
            .map(|m| (m.features.as_slice(), m.context_id)),
    )
}

fn nearest_context<'a>(
    x: &[f64],
    reference: impl Iterator<Item = (&'a [f64], Option<usize>)>,
) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (features, context) in reference {
        let Some(context) = context else {
            bail!(State, "reference majority instance has no context");
        };
        let d = squared_distance(x, features);
        best = match best {
            Some((bd, bc)) if bd < d || (bd == d && bc <= context) => Some((bd, bc)),
            _ => Some((d, context)),
        };
    }
    match best {
        Some((_, c)) => Ok(c),
        None => bail!(
            State,
            "no majority instances available to assign a minority context"
        ),
    }
}

/// FIFO of recent majority instances used to contextualise minority instances.
#[derive(Clone, Debug)]
pub struct MinorityContextAssigner {
    capacity: usize,
    recent: VecDeque<(Vec<f64>, usize)>,
}

impl MinorityContextAssigner {
    pub fn new(capacity: usize) -> Self {
        MinorityContextAssigner {
            capacity: capacity.max(1),
            recent: VecDeque::new(),
        }
    }

    pub fn observe_majority(&mut self, features: &[f64], context: usize) {
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back((features.to_vec(), context));
    }

    pub fn assign(&self, features: &[f64]) -> Result<usize> {
        nearest_context(
            features,
            self.recent.iter().map(|(f, c)| (f.as_slice(), Some(*c))),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }
}

fn pick_index(rng: &mut StreamRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u: f64 = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Shared majority/minority bookkeeping for both generator families.
#[derive(Clone, Debug)]
struct Labeller {
    descriptor: StreamDescriptor,
    rng: StreamRng,
    assigner: MinorityContextAssigner,
}

impl Labeller {
    fn new(descriptor: StreamDescriptor) -> Result<Self> {
        descriptor.validate()?;
        let rng = seeded(descriptor.seed);
        Ok(Labeller {
            descriptor,
            rng,
            assigner: MinorityContextAssigner::new(MINORITY_REFERENCE_WINDOW),
        })
    }

    fn draw_is_minority(&mut self) -> bool {
        self.descriptor.minority_fraction > 0.0
            && self.rng.random::<f64>() < self.descriptor.minority_fraction
    }

    fn draw_context(&mut self) -> usize {
        pick_index(&mut self.rng, &self.descriptor.context_probabilities)
    }

    fn majority(&mut self, features: Vec<f64>, context: usize) -> Instance {
        self.assigner.observe_majority(&features, context);
        Instance::labelled(features, ClassLabel::Majority, Some(context))
    }

    fn minority(&mut self, features: Vec<f64>) -> Instance {
        // Before any majority instance exists, fall back to the context prior.
        let context = match self.assigner.assign(&features) {
            Ok(c) => c,
            Err(_) => self.draw_context(),
        };
        Instance::labelled(features, ClassLabel::Minority, Some(context))
    }
}

/// Mixture-of-MVNDs stream: each context owns one or more diagonal Gaussians.
#[derive(Clone, Debug)]
pub struct MixtureModelStream {
    labeller: Labeller,
    majority: Vec<Vec<MvndComponent>>,
    minority: Vec<MvndComponent>,
}

impl MixtureModelStream {
    pub fn new(
        descriptor: StreamDescriptor,
        majority: Vec<Vec<MvndComponent>>,
        minority: Vec<MvndComponent>,
    ) -> Result<Self> {
        descriptor.validate()?;
        if majority.len() != descriptor.context_count() {
            bail!(
                Config,
                "expected components for {} contexts, got {}",
                descriptor.context_count(),
                majority.len()
            );
        }
        if majority.iter().any(Vec::is_empty) {
            bail!(Config, "every context needs at least one component");
        }
        if descriptor.minority_fraction > 0.0 && minority.is_empty() {
            bail!(
                Config,
                "minority fraction is positive but no minority components were given"
            );
        }
        let d = descriptor.dimension;
        if majority
            .iter()
            .flatten()
            .chain(&minority)
            .any(|c| c.mean.len() != d)
        {
            bail!(
                Config,
                "component dimension differs from stream dimension {}",
                d
            );
        }
        Ok(MixtureModelStream {
            labeller: Labeller::new(descriptor)?,
            majority,
            minority,
        })
    }

    pub fn descriptor(&self) -> &StreamDescriptor {
        &self.labeller.descriptor
    }
}

impl Iterator for MixtureModelStream {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        let lab = &mut self.labeller;
        if lab.draw_is_minority() {
            let k = lab.rng.random_range(0..self.minority.len());
            let x = self.minority[k].sample(&mut lab.rng);
            Some(lab.minority(x))
        } else {
            let c = lab.draw_context();
            let comps = &self.majority[c];
            let k = lab.rng.random_range(0..comps.len());
            let x = comps[k].sample(&mut lab.rng);
            Some(lab.majority(x, c))
        }
    }
}

/// Where an RBF-stream instance came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RbfOrigin {
    Majority { context: usize, centroid: usize },
    Minority { centroid: usize },
    Noise,
}

/// Random-RBF style stream: instances are uniform within a weighted centroid ball.
#[derive(Clone, Debug)]
pub struct RbfStream {
    labeller: Labeller,
    majority: Vec<Vec<RbfCentroid>>,
    minority: Vec<RbfCentroid>,
    noise_fraction: f64,
    noise_box: (Vec<f64>, Vec<f64>),
}

impl RbfStream {
    pub fn new(
        descriptor: StreamDescriptor,
        majority: Vec<Vec<RbfCentroid>>,
        minority: Vec<RbfCentroid>,
        noise_fraction: f64,
    ) -> Result<Self> {
        descriptor.validate()?;
        if !(0.0..=1.0).contains(&noise_fraction) {
            bail!(Config, "noise fraction {} outside [0, 1]", noise_fraction);
        }
        if majority.len() != descriptor.context_count() || majority.iter().any(Vec::is_empty) {
            bail!(Config, "every context needs at least one centroid");
        }
        if descriptor.minority_fraction > 0.0 && minority.is_empty() {
            bail!(
                Config,
                "minority fraction is positive but no minority centroids were given"
            );
        }
        let d = descriptor.dimension;
        if majority
            .iter()
            .flatten()
            .chain(&minority)
            .any(|c| c.center.len() != d)
        {
            bail!(
                Config,
                "centroid dimension differs from stream dimension {}",
                d
            );
        }
        let noise_box = bounding_box(majority.iter().flatten().chain(&minority), d);
        Ok(RbfStream {
            labeller: Labeller::new(descriptor)?,
            majority,
            minority,
            noise_fraction,
            noise_box,
        })
    }

    pub fn descriptor(&self) -> &StreamDescriptor {
        &self.labeller.descriptor
    }

    /// Axis-aligned box used for uniform noise.
    pub fn noise_box(&self) -> (&[f64], &[f64]) {
        (&self.noise_box.0, &self.noise_box.1)
    }

    /// Next instance together with the generator component that produced it.
    pub fn next_traced(&mut self) -> (Instance, RbfOrigin) {
        let lab = &mut self.labeller;
        if lab.draw_is_minority() {
            if self.noise_fraction > 0.0 && lab.rng.random::<f64>() < self.noise_fraction {
                let (lo, hi) = &self.noise_box;
                let x = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| lab.rng.random_range(*l..=*h))
                    .collect();
                (lab.minority(x), RbfOrigin::Noise)
            } else {
                let weights: Vec<f64> = self.minority.iter().map(|c| c.weight).collect();
                let k = pick_index(&mut lab.rng, &weights);
                let x = self.minority[k].sample(&mut lab.rng);
                (lab.minority(x), RbfOrigin::Minority { centroid: k })
            }
        } else {
            let c = lab.draw_context();
            let weights: Vec<f64> = self.majority[c].iter().map(|c| c.weight).collect();
            let k = pick_index(&mut lab.rng, &weights);
            let x = self.majority[c][k].sample(&mut lab.rng);
            (
                lab.majority(x, c),
                RbfOrigin::Majority {
                    context: c,
                    centroid: k,
                },
            )
        }
    }
}

impl Iterator for RbfStream {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        Some(self.next_traced().0)
    }
}

/// Box enclosing every centroid ball, grown by 10% of its extent (half on each side).
fn bounding_box<'a>(
    centroids: impl Iterator<Item = &'a RbfCentroid>,
    d: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut lo = alloc::vec![f64::INFINITY; d];
    let mut hi = alloc::vec![f64::NEG_INFINITY; d];
    for c in centroids {
        for i in 0..d {
            lo[i] = lo[i].min(c.center[i] - c.radius);
            hi[i] = hi[i].max(c.center[i] + c.radius);
        }
    }
    for i in 0..d {
        let pad = 0.05 * (hi[i] - lo[i]);
        lo[i] -= pad;
        hi[i] += pad;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn descriptor(probs: Vec<f64>, minority: f64, seed: u64) -> StreamDescriptor {
        StreamDescriptor {
            dimension: 1,
            context_probabilities: probs,
            minority_fraction: minority,
            seed,
        }
    }

    fn two_context_mixture(minority: f64, seed: u64) -> MixtureModelStream {
        MixtureModelStream::new(
            descriptor(vec![0.3, 0.7], minority, seed),
            vec![
                vec![MvndComponent::isotropic(vec![0.0], 0.1).unwrap()],
                vec![MvndComponent::isotropic(vec![10.0], 0.1).unwrap()],
            ],
            vec![MvndComponent::isotropic(vec![5.0], 1.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_sequence() {
        let a: Vec<_> = two_context_mixture(0.1, 7).take(2).collect();
        let b: Vec<_> = two_context_mixture(0.1, 7).take(2).collect();
        assert_eq!(a, b);
        let c: Vec<_> = two_context_mixture(0.1, 8).take(2).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_minority_fraction_never_emits_minority() {
        assert!(two_context_mixture(0.0, 3)
            .take(5000)
            .all(|i| !i.is_minority()));
    }

    #[test]
    fn context_frequencies_match_probabilities() {
        // Binomial 3-sigma band around n·p for each context.
        let n = 10_000usize;
        let mut counts = [0usize; 2];
        for inst in two_context_mixture(0.0, 11).take(n) {
            let c = inst.context_id.unwrap();
            counts[c] += 1;
            // context 0 lives near 0, context 1 near 10
            assert!((inst.features[0] - 10.0 * c as f64).abs() < 1.0);
        }
        for (c, p) in [0.3f64, 0.7].iter().enumerate() {
            let mean = n as f64 * p;
            let sd = libm::sqrt(n as f64 * p * (1.0 - p));
            assert!(
                (counts[c] as f64 - mean).abs() <= 3.0 * sd,
                "context {c}: {}",
                counts[c]
            );
        }
    }

    #[test]
    fn empty_component_list_is_rejected() {
        let err = MixtureModelStream::new(descriptor(vec![1.0], 0.0, 1), vec![vec![]], vec![]);
        assert!(matches!(err, Err(crate::Error::Config(_))));
        let err = MixtureModelStream::new(descriptor(vec![0.5, 0.4], 0.0, 1), vec![], vec![]);
        assert!(matches!(err, Err(crate::Error::Config(_))));
    }

    #[test]
    fn assign_minority_context_cases() {
        let maj = |f: Vec<f64>, c| Instance::labelled(f, ClassLabel::Majority, Some(c));
        let m = Instance::new(vec![0.0, 0.0]);
        let recent = vec![maj(vec![0.0, 1.0], 2), maj(vec![5.0, 5.0], 0)];
        assert_eq!(assign_minority_context(&m, &recent).unwrap(), 2);

        let recent = vec![maj(vec![3.0, 3.0], 0), maj(vec![0.0, 0.0], 1)];
        assert_eq!(assign_minority_context(&m, &recent).unwrap(), 1);

        let recent = vec![maj(vec![1.0, 0.0], 3), maj(vec![-1.0, 0.0], 1)];
        assert_eq!(assign_minority_context(&m, &recent).unwrap(), 1);

        assert!(matches!(
            assign_minority_context(&m, &[]),
            Err(crate::Error::State(_))
        ));
    }

    fn rbf(noise: f64, minority: f64, seed: u64) -> RbfStream {
        let d = StreamDescriptor {
            dimension: 2,
            context_probabilities: vec![0.5, 0.5],
            minority_fraction: minority,
            seed,
        };
        RbfStream::new(
            d,
            vec![
                vec![RbfCentroid::new(vec![0.0, 0.0], 1.0, 1.0).unwrap()],
                vec![
                    RbfCentroid::new(vec![5.0, 0.0], 0.5, 2.0).unwrap(),
                    RbfCentroid::new(vec![5.0, 5.0], 0.5, 1.0).unwrap(),
                ],
            ],
            vec![RbfCentroid::new(vec![2.5, 2.5], 0.3, 1.0).unwrap()],
            noise,
        )
        .unwrap()
    }

    #[test]
    fn rbf_instances_stay_in_their_ball() {
        let mut s = rbf(0.0, 0.2, 4);
        let mut max = [0.0f64; 3];
        for _ in 0..3000 {
            let (inst, origin) = s.next_traced();
            let (center, radius, slot) = match origin {
                RbfOrigin::Majority { context: 0, .. } => ([0.0, 0.0], 1.0, 0),
                RbfOrigin::Majority {
                    context: 1,
                    centroid: 0,
                } => ([5.0, 0.0], 0.5, 1),
                RbfOrigin::Majority { .. } => ([5.0, 5.0], 0.5, 1),
                RbfOrigin::Minority { .. } => ([2.5, 2.5], 0.3, 2),
                RbfOrigin::Noise => panic!("noise with zero noise fraction"),
            };
            let dist = libm::sqrt(squared_distance(&inst.features, &center));
            assert!(dist <= radius + 1e-12);
            max[slot] = max[slot].max(dist / radius);
        }
        assert!(max.iter().all(|m| *m > 0.5));
    }

    #[test]
    fn rbf_noise_fraction_is_binomial() {
        // 99% two-sided binomial interval for Bin(10000, 0.5): 5000 ± 2.5758·50.
        let mut s = rbf(0.5, 1.0, 9);
        let noise = (0..10_000)
            .filter(|_| s.next_traced().1 == RbfOrigin::Noise)
            .count() as f64;
        assert!(
            (noise - 5000.0).abs() <= 2.5758 * 50.0,
            "noise count {noise}"
        );
    }

    #[test]
    fn rbf_rejects_bad_noise_fraction() {
        let d = StreamDescriptor {
            dimension: 1,
            context_probabilities: vec![1.0],
            minority_fraction: 0.0,
            seed: 0,
        };
        let c = vec![vec![RbfCentroid::new(vec![0.0], 1.0, 1.0).unwrap()]];
        assert!(matches!(
            RbfStream::new(d.clone(), c.clone(), vec![], 1.5),
            Err(crate::Error::Config(_))
        ));
        assert!(matches!(
            RbfStream::new(d, c, vec![], -0.1),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn rbf_noise_box_encloses_balls_with_margin() {
        let s = rbf(0.1, 0.1, 1);
        let (lo, hi) = s.noise_box();
        // extent x: [-1, 5.5] -> width 6.5, pad 0.325
        assert!((lo[0] + 1.325).abs() < 1e-12);
        assert!((hi[0] - 5.825).abs() < 1e-12);
    }

    #[test]
    fn generated_instances_satisfy_invariants() {
        for inst in rbf(0.3, 0.3, 2).take(2000) {
            inst.validate(2, Some(2)).unwrap();
        }
        for inst in two_context_mixture(0.2, 5).take(2000) {
            inst.validate(1, Some(2)).unwrap();
        }
    }

    #[test]
    fn instance_validation_flags_problems() {
        assert!(Instance::new(vec![f64::NAN]).validate(1, None).is_err());
        assert!(Instance::new(vec![1.0]).validate(2, None).is_err());
        assert!(Instance::new(vec![1.0])
            .with_context(3)
            .validate(1, Some(2))
            .is_err());
    }
}
