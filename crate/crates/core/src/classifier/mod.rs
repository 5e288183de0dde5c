//! Streaming one-class base classifiers behind one scoring contract.
//!
//! Every classifier reports an [`AnomalyScore`] where larger means more
//! anomalous. Half-space tree masses are negated to fit that orientation.

pub mod autoencoder;
pub mod half_space;
pub mod nnd;
pub mod scaling;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use autoencoder::StreamingAutoencoder;
pub use half_space::HalfSpaceForest;
pub use nnd::NeighbourBuffer;
pub use scaling::MinMaxScaler;

use crate::error::{bail, Error, Result};

/// Anomaly score, larger = more anomalous.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct AnomalyScore(f64);

impl AnomalyScore {
    pub fn new(value: f64) -> Self {
        AnomalyScore(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Initialise once, then score and train instance by instance.
pub trait OneClassClassifier {
    fn dimension(&self) -> usize;
    /// Scoring never mutates the model.
    fn score(&self, x: &[f64]) -> Result<AnomalyScore>;
    fn train(&mut self, x: &[f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Autoencoder,
    HalfSpaceTrees,
    NearestNeighbour,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Autoencoder,
        ClassifierKind::HalfSpaceTrees,
        ClassifierKind::NearestNeighbour,
    ];

    /// Autoencoder and half-space trees assume a bounded `[0,1]` workspace.
    pub fn uses_scaling(self) -> bool {
        !matches!(self, ClassifierKind::NearestNeighbour)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Autoencoder => "sa",
            ClassifierKind::HalfSpaceTrees => "hstrees",
            ClassifierKind::NearestNeighbour => "nnd",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(ClassifierKind::Autoencoder),
            "hstrees" => Ok(ClassifierKind::HalfSpaceTrees),
            "nnd" => Ok(ClassifierKind::NearestNeighbour),
            other => bail!(
                Config,
                "unknown classifier '{}' (expected sa, hstrees or nnd)",
                other
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub hst_window: usize,
    pub hst_trees: usize,
    pub hst_depth: usize,
    pub hst_size_limit: f64,
    pub nnd_capacity: usize,
    pub nnd_threshold: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            learning_rate: autoencoder::DEFAULT_LEARNING_RATE,
            epochs: 20,
            hst_window: half_space::DEFAULT_WINDOW,
            hst_trees: half_space::DEFAULT_TREES,
            hst_depth: half_space::DEFAULT_DEPTH,
            hst_size_limit: half_space::DEFAULT_SIZE_LIMIT,
            nnd_capacity: nnd::DEFAULT_CAPACITY,
            nnd_threshold: nnd::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Model {
    Autoencoder(StreamingAutoencoder),
    HalfSpace(HalfSpaceForest),
    Neighbour(NeighbourBuffer),
}

/// One of the three base classifiers plus the optional input scaler it sees the stream through.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseClassifier {
    scaler: Option<MinMaxScaler>,
    model: Model,
}

impl BaseClassifier {
    /// Builds and initialises a classifier on `window` (raw feature vectors).
    pub fn fit(
        kind: ClassifierKind,
        settings: &ClassifierSettings,
        window: &[Vec<f64>],
        scaler: Option<MinMaxScaler>,
        seed: u64,
    ) -> Result<Self> {
        let Some(first) = window.first() else {
            bail!(
                State,
                "cannot train a {} classifier on an empty window",
                kind
            );
        };
        let d = first.len();
        let scaled: Vec<Vec<f64>> = match &scaler {
            Some(s) => window.iter().map(|x| s.transform(x)).collect(),
            None => window.to_vec(),
        };
        let rows = || scaled.iter().map(Vec::as_slice);
        let model = match kind {
            ClassifierKind::Autoencoder => Model::Autoencoder(StreamingAutoencoder::initialize(
                rows(),
                d,
                settings.learning_rate,
                settings.epochs,
                seed,
            )?),
            ClassifierKind::HalfSpaceTrees => Model::HalfSpace(HalfSpaceForest::initialize(
                rows(),
                d,
                settings.hst_trees,
                settings.hst_depth,
                settings.hst_window,
                settings.hst_size_limit,
                seed,
            )?),
            ClassifierKind::NearestNeighbour => Model::Neighbour(NeighbourBuffer::initialize(
                rows(),
                d,
                settings.nnd_capacity,
                settings.nnd_threshold,
            )?),
        };
        Ok(BaseClassifier { scaler, model })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            Model::Autoencoder(_) => ClassifierKind::Autoencoder,
            Model::HalfSpace(_) => ClassifierKind::HalfSpaceTrees,
            Model::Neighbour(_) => ClassifierKind::NearestNeighbour,
        }
    }

    fn inner(&self) -> &dyn OneClassClassifier {
        match &self.model {
            Model::Autoencoder(m) => m,
            Model::HalfSpace(m) => m,
            Model::Neighbour(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn OneClassClassifier {
        match &mut self.model {
            Model::Autoencoder(m) => m,
            Model::HalfSpace(m) => m,
            Model::Neighbour(m) => m,
        }
    }

    fn prepare<'a>(&self, x: &'a [f64]) -> Result<alloc::borrow::Cow<'a, [f64]>> {
        crate::error::check_dimension(self.dimension(), x)?;
        crate::error::check_finite(x)?;
        Ok(match &self.scaler {
            Some(s) => alloc::borrow::Cow::Owned(s.transform(x)),
            None => alloc::borrow::Cow::Borrowed(x),
        })
    }

    pub fn neighbour_buffer(&self) -> Option<&NeighbourBuffer> {
        match &self.model {
            Model::Neighbour(b) => Some(b),
            _ => None,
        }
    }
}

impl OneClassClassifier for BaseClassifier {
    fn dimension(&self) -> usize {
        self.inner().dimension()
    }

    fn score(&self, x: &[f64]) -> Result<AnomalyScore> {
        let x = self.prepare(x)?;
        self.inner().score(&x)
    }

    fn train(&mut self, x: &[f64]) -> Result<()> {
        let x = self.prepare(x)?;
        self.inner_mut().train(&x)
    }
}
