use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::naive_bayes::NaiveBayes;
use super::{
    check_window, fit_per_context, shared_scaler, Framework, FrameworkConfig, FrameworkKind,
    ModelBank, StreamVerdict, Training,
};
use crate::error::{bail, Result};
use crate::stream::Instance;

/// Per-context classifiers selected by a naive Bayes context decider.
///
/// Context ids are only read during initialisation. The decider is not
/// updated online.
#[derive(Clone, Debug)]
pub struct OcFuzzy {
    bank: ModelBank,
    decider: NaiveBayes,
}

impl OcFuzzy {
    pub fn initialize(config: &FrameworkConfig, window: &[Instance]) -> Result<Self> {
        let d = check_window(config, window)?;
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
        let scaler = shared_scaler(config, window)?;
        let models = fit_per_context(config, &mut buffers, &scaler)?;
        let mut decider = NaiveBayes::new(d);
        for (c, buffer) in &buffers {
            for x in buffer {
                decider.train(x, *c)?;
            }
        }
        Ok(OcFuzzy {
            bank: ModelBank::new(models, config.threshold),
            decider,
        })
    }

    pub fn decider(&self) -> &NaiveBayes {
        &self.decider
    }
}

impl Framework for OcFuzzy {
    fn kind(&self) -> FrameworkKind {
        FrameworkKind::OcFuzzy
    }

    fn threshold(&self) -> f64 {
        self.bank.threshold
    }

    fn set_threshold(&mut self, threshold: f64) {
        self.bank.threshold = threshold;
    }

    fn step(&mut self, instance: &Instance, training: Training) -> Result<StreamVerdict> {
        let c = self.decider.predict(&instance.features)?;
        self.bank
            .evaluate(c, &instance.features, |label| training.permits(label))
    }

    fn training_counts(&self) -> Vec<(usize, u64)> {
        self.bank.counts()
    }
}
