//! Cross-validated experiment runs.
//!
//! Every (framework, classifier, fold) triple is an independent replica over
//! the same materialised stream. Replicas run on a pool of scoped threads and
//! their results are collected into fixed slots, so output never depends on
//! scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ctxocc_core::classifier::ClassifierKind;
use ctxocc_core::evaluation::{run_fold, FoldResult};
use ctxocc_core::framework::{FrameworkConfig, FrameworkKind};
use ctxocc_core::rng::derive_seed;
use ctxocc_core::stream::Instance;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

const FOLD_SEED_LABEL: u64 = 0xF01D_0000;

/// Framework seed used by fold `fold` of every series.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    derive_seed(master, FOLD_SEED_LABEL + fold as u64)
}

/// All folds of one framework/classifier pairing.
#[derive(Clone, Debug)]
pub struct Series {
    pub framework: FrameworkKind,
    pub classifier: ClassifierKind,
    pub folds: Vec<FoldResult>,
}

impl Series {
    pub fn label(&self) -> String {
        format!("{}/{}", self.framework, self.classifier)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub instances: usize,
    pub minority: usize,
    pub series: Vec<Series>,
}

/// Replica configuration for one job.
pub fn replica_config(
    config: &ExperimentConfig,
    classifier: ClassifierKind,
    fold: usize,
) -> FrameworkConfig {
    FrameworkConfig {
        classifier,
        seed: fold_seed(config.seed, fold),
        ..config.framework.clone()
    }
}

fn worker_count(config: &ExperimentConfig, jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = if config.workers == 0 {
        available
    } else {
        config.workers
    };
    wanted.clamp(1, jobs.max(1))
}

/// Runs every replica over `stream`.
pub fn run_on_stream(config: &ExperimentConfig, stream: &[Instance]) -> Result<RunOutcome> {
    if stream.len() <= config.framework.initial_points {
        return Err(HarnessError::Initialization(format!(
            "stream has {} instances but the initial window needs {} plus at least one online instance",
            stream.len(),
            config.framework.initial_points
        )));
    }
    let evaluation = config.effective_evaluation();
    let k = evaluation.fold_count;
    let mut jobs = Vec::new();
    for &framework in &config.frameworks {
        for &classifier in &config.classifiers {
            for fold in 0..k {
                jobs.push((framework, classifier, fold));
            }
        }
    }
    let slots: Vec<Mutex<Option<Result<FoldResult>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..worker_count(config, jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(framework, classifier, fold)) = jobs.get(i) else {
                    break;
                };
                let cfg = replica_config(config, classifier, fold);
                let result = run_fold(stream, fold, framework, &cfg, &evaluation).map_err(|e| {
                    let context = format!("{framework}/{classifier} fold {fold}");
                    match HarnessError::from(e) {
                        HarnessError::Initialization(m) => {
                            HarnessError::Initialization(format!("{context}: {m}"))
                        }
                        HarnessError::Core(ctxocc_core::Error::Config(m)) => {
                            HarnessError::config("framework", format!("{context}: {m}"))
                        }
                        HarnessError::Core(c) => HarnessError::Run(format!("{context}: {c}")),
                        other => other,
                    }
                });
                *slots[i].lock().expect("result slot") = Some(result);
            });
        }
    });

    let mut results = slots
        .into_iter()
        .map(|s| s.into_inner().expect("result slot").expect("every job ran"));
    let mut series = Vec::new();
    for &framework in &config.frameworks {
        for &classifier in &config.classifiers {
            let folds = (0..k)
                .map(|_| results.next().expect("one result per job"))
                .collect::<Result<Vec<_>>>()?;
            series.push(Series {
                framework,
                classifier,
                folds,
            });
        }
    }
    Ok(RunOutcome {
        instances: stream.len(),
        minority: stream.iter().filter(|x| x.is_minority()).count(),
        series,
    })
}

/// Materialises the configured stream and runs every replica.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let stream = config.stream.generate(config.length)?;
    run_on_stream(config, &stream)
}
