use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use super::{
    check_window, fit_per_context, shared_scaler, top_up, ContextModelSet, Framework,
    FrameworkConfig, FrameworkKind, ModelBank, StreamVerdict, Training,
};
use crate::classifier::{BaseClassifier, MinMaxScaler};
use crate::clustering::{
    macro_cluster, match_clusterings, nearest_cluster, Clustering, MicroClusterPool,
};
use crate::error::{Error, Result};
use crate::math::euclidean;
use crate::rng::derive_seed;
use crate::stream::Instance;

/// What happened at one re-clustering boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReclusterEvent {
    /// Online instances processed when the boundary was reached.
    pub at: u64,
    pub clusters: usize,
    pub inherited: usize,
    pub fresh: usize,
    /// Unmatched clusters that received no recent instances and were discarded.
    pub dropped: usize,
    /// The new clustering was unusable and the previous one stays in force.
    pub kept_previous: bool,
    pub degenerate: bool,
}

/// Per-cluster classifiers over contexts discovered by stream clustering.
#[derive(Clone, Debug)]
pub struct OcCluster {
    config: FrameworkConfig,
    scaler: Option<MinMaxScaler>,
    pool: MicroClusterPool,
    clustering: Clustering,
    bank: ModelBank,
    recent: VecDeque<Vec<f64>>,
    clock: u64,
    processed: u64,
    events: Vec<ReclusterEvent>,
}

fn init_error(e: Error) -> Error {
    match e {
        Error::State(m) => Error::Initialization(m),
        other => other,
    }
}

fn subset(clustering: &Clustering, keep: impl Fn(usize) -> bool) -> Result<Clustering> {
    Clustering::new(
        clustering
            .clusters()
            .iter()
            .filter(|c| keep(c.id))
            .cloned()
            .collect(),
        clustering.total_mass(),
    )
}

/// Groups `points` by their nearest cluster.
fn assign<'a>(
    clustering: &Clustering,
    points: impl Iterator<Item = &'a [f64]>,
) -> Result<BTreeMap<usize, Vec<Vec<f64>>>> {
    let mut buffers: BTreeMap<usize, Vec<Vec<f64>>> = clustering
        .clusters()
        .iter()
        .map(|c| (c.id, Vec::new()))
        .collect();
    for x in points {
        let (id, _) = nearest_cluster(clustering, x)?;
        buffers.entry(id).or_default().push(x.to_vec());
    }
    Ok(buffers)
}

impl OcCluster {
    pub fn initialize(config: &FrameworkConfig, window: &[Instance]) -> Result<Self> {
        let d = check_window(config, window)?;
        let scaler = shared_scaler(config, window)?;
        let mut pool = MicroClusterPool::with_defaults(d)?;
        let mut clock = 0;
        for inst in window {
            pool.insert(&inst.features, clock)?;
            clock += 1;
        }
        let clustering = macro_cluster(
            &pool,
            config.k_min,
            config.k_max,
            derive_seed(config.seed, 0x3000),
        )
        .map_err(init_error)?;
        let survivors = clustering.pruned()?;
        if survivors.is_empty() {
            return Err(Error::Initialization(alloc::format!(
                "all {} clusters of the initial window were pruned",
                clustering.len()
            )));
        }
        let majority = window
            .iter()
            .filter(|i| !i.is_minority())
            .map(|i| i.features.as_slice());
        let mut buffers = assign(&survivors, majority)?;
        buffers.retain(|_, b| !b.is_empty());
        if buffers.is_empty() {
            return Err(Error::Initialization(
                "no surviving cluster holds a training instance".into(),
            ));
        }
        let clustering = subset(&survivors, |id| buffers.contains_key(&id))?;
        let models = fit_per_context(config, &mut buffers, &scaler)?;
        let cap = config.recluster_period;
        let recent = window
            .iter()
            .rev()
            .take(cap)
            .rev()
            .map(|i| i.features.clone())
            .collect();
        Ok(OcCluster {
            config: config.clone(),
            scaler,
            pool,
            clustering,
            bank: ModelBank::new(models, config.threshold),
            recent,
            clock,
            processed: 0,
            events: Vec::new(),
        })
    }

    pub fn micro_clusters(&self) -> &MicroClusterPool {
        &self.pool
    }

    pub fn classifier(&self, cluster: usize) -> Option<&BaseClassifier> {
        self.bank.models.get(cluster)
    }

    fn recluster(&mut self) -> Result<()> {
        let round = self.events.len() as u64;
        let cfg = &self.config;
        let mut event = ReclusterEvent {
            at: self.processed,
            clusters: self.clustering.len(),
            inherited: 0,
            fresh: 0,
            dropped: 0,
            kept_previous: true,
            degenerate: false,
        };
        let new = match macro_cluster(
            &self.pool,
            cfg.k_min,
            cfg.k_max,
            derive_seed(cfg.seed, 0x4000 + round),
        ) {
            Ok(c) => c,
            Err(Error::State(_)) => {
                self.events.push(event);
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        event.degenerate = new.is_degenerate();
        let matched = match_clusterings(
            &self.clustering,
            &new,
            cfg.movement_threshold,
            &self.bank.models,
            derive_seed(cfg.seed, 0x5000 + round),
        )?;
        if matched.clustering.is_empty() {
            self.events.push(event);
            return Ok(());
        }
        let mut buffers = assign(&matched.clustering, self.recent.iter().map(Vec::as_slice))?;
        let mut models: ContextModelSet<BaseClassifier> = matched.models;
        event.inherited = models.len();
        let mut dropped = Vec::new();
        for id in &matched.needs_new {
            let buffer = buffers.entry(*id).or_default();
            if buffer.is_empty() {
                dropped.push(*id);
                continue;
            }
            let label = (round << 16) | *id as u64;
            top_up(buffer, cfg, derive_seed(cfg.seed, 0x6000_0000 + label))?;
            let clf = BaseClassifier::fit(
                cfg.classifier,
                &cfg.settings,
                buffer,
                self.scaler.clone(),
                derive_seed(cfg.seed, 0x7000_0000 + label),
            )?;
            models.insert(*id, clf);
            event.fresh += 1;
        }
        event.dropped = dropped.len();
        if models.is_empty() {
            self.events.push(event);
            return Ok(());
        }
        self.clustering = subset(&matched.clustering, |id| !dropped.contains(&id))?;
        self.bank.replace(models);
        event.clusters = self.clustering.len();
        event.kept_previous = false;
        self.events.push(event);
        Ok(())
    }
}

impl Framework for OcCluster {
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::OcCluster
    }

    fn threshold(&self) -> f64 {
        self.bank.threshold
    }

    fn set_threshold(&mut self, threshold: f64) {
        self.bank.threshold = threshold;
    }

    fn step(&mut self, instance: &Instance, training: Training) -> Result<StreamVerdict> {
        let x = instance.features.as_slice();
        let (id, _) = nearest_cluster(&self.clustering, x)?;
        let cluster = self.clustering.get(id).expect("nearest cluster exists");
        let included =
            euclidean(x, &cluster.center) <= self.config.inclusion_threshold * cluster.radius;
        let verdict = self
            .bank
            .evaluate(id, x, |label| included && training.permits(label))?;
        if training != Training::Never {
            self.pool.insert(x, self.clock)?;
            self.clock += 1;
            if self.recent.len() == self.config.recluster_period {
                self.recent.pop_front();
            }
            self.recent.push_back(x.to_vec());
        }
        self.processed += 1;
        if self.processed % self.config.recluster_period as u64 == 0 {
            self.recluster()?;
        }
        Ok(verdict)
    }

    fn training_counts(&self) -> Vec<(usize, u64)> {
        self.bank.counts()
    }

    fn clustering(&self) -> Option<&Clustering> {
        Some(&self.clustering)
    }

    fn recluster_events(&self) -> &[ReclusterEvent] {
        &self.events
    }
}
