//! Experiment harness for `ctxocc-core`: configuration, stream presets, CSV
//! ingestion, cross-validated runs, output files and run comparison. The
//! `ctxocc` binary is a thin command-line layer over this library.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod presets;
pub mod report;

pub use config::{ExperimentConfig, KeyValues};
pub use error::{HarnessError, Result};
