use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{
    check_window, fit_per_context, shared_scaler, Framework, FrameworkConfig, FrameworkKind,
    ModelBank, StreamVerdict, Training,
};
use crate::error::{bail, Result};
use crate::stream::Instance;

/// Per-context classifiers selected by the context id carried on each instance.
#[derive(Clone, Debug)]
pub struct OcComplete {
    bank: ModelBank,
    contexts: usize,
    synthetic: BTreeMap<usize, usize>,
}

impl OcComplete {
    pub fn initialize(config: &FrameworkConfig, window: &[Instance]) -> Result<Self> {
        check_window(config, window)?;
        let mut buffers: BTreeMap<usize, Vec<Vec<f64>>> =
            (0..config.contexts).map(|c| (c, Vec::new())).collect();
        for inst in window.iter().filter(|i| !i.is_minority()) {
            let Some(c) = inst.context_id else {
                bail!(
                    Initialization,
                    "initial window instance without a context id"
                );
            };
            match buffers.get_mut(&c) {
                Some(b) => b.push(inst.features.clone()),
                None => bail!(
                    Initialization,
                    "context id {} outside 0..{}",
                    c,
                    config.contexts
                ),
            }
        }
        let real: BTreeMap<usize, usize> = buffers.iter().map(|(k, v)| (*k, v.len())).collect();
        let scaler = shared_scaler(config, window)?;
        let models = fit_per_context(config, &mut buffers, &scaler)?;
        let synthetic = buffers
            .iter()
            .map(|(k, v)| (*k, v.len() - real[k]))
            .collect();
        Ok(OcComplete {
            bank: ModelBank::new(models, config.threshold),
            contexts: config.contexts,
            synthetic,
        })
    }

    /// Number of SMOTE instances added to each context during initialisation.
    pub fn synthetic_counts(&self) -> &BTreeMap<usize, usize> {
        &self.synthetic
    }

    pub fn classifier(&self, context: usize) -> Option<&crate::classifier::BaseClassifier> {
        self.bank.models.get(context)
    }
}

impl Framework for OcComplete {
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::OcComplete
    }

    fn threshold(&self) -> f64 {
        self.bank.threshold
    }

    fn set_threshold(&mut self, threshold: f64) {
        self.bank.threshold = threshold;
    }

    fn step(&mut self, instance: &Instance, training: Training) -> Result<StreamVerdict> {
        let Some(c) = instance.context_id else {
            bail!(Contract, "instance carries no context id");
        };
        if c >= self.contexts {
            bail!(Contract, "unknown context id {}", c);
        }
        self.bank
            .evaluate(c, &instance.features, |label| training.permits(label))
    }

    fn training_counts(&self) -> Vec<(usize, u64)> {
        self.bank.counts()
    }
}

/// One classifier for the whole stream.
#[derive(Clone, Debug)]
pub struct Single {
    inner: OcComplete,
}

impl Single {
    pub fn initialize(config: &FrameworkConfig, window: &[Instance]) -> Result<Self> {
        let config = FrameworkConfig {
            contexts: 1,
            ..config.clone()
        };
        let window: Vec<Instance> = window
            .iter()
            .map(|i| Instance {
                context_id: Some(0),
                ..i.clone()
            })
            .collect();
        Ok(Single {
            inner: OcComplete::initialize(&config, &window)?,
        })
    }
}

impl Framework for Single {
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::Single
    }

    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    fn set_threshold(&mut self, threshold: f64) {
        self.inner.set_threshold(threshold);
    }

    fn step(&mut self, instance: &Instance, training: Training) -> Result<StreamVerdict> {
        self.inner
            .bank
            .evaluate(0, &instance.features, |label| training.permits(label))
    }

    fn training_counts(&self) -> Vec<(usize, u64)> {
        self.inner.training_counts()
    }
}
