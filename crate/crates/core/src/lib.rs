//! Contextual one-class classification for data streams.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the streaming
//! one-class base classifiers (streaming autoencoder, streaming half-space
//! trees, nearest-neighbour data description), the three context-aware
//! frameworks that route each instance to a per-context classifier, the
//! stream clustering and cluster distance machinery those frameworks rely on,
//! context oversampling, window sizing, synthetic stream generators and the
//! prequential evaluation toolkit.
//!
//! Everything that touches files, threads or the command line lives in the
//! companion `ctxocc` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classifier;
pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod framework;
pub mod math;
pub mod rng;
pub mod sampling;
pub mod stream;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
