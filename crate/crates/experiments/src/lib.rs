//! Experiment harness: identity verification, synthetic and ECG sweeps,
//! metrics files and plots.

pub mod config;
pub mod ecg;
pub mod error;
pub mod metrics;
pub mod models;
pub mod plot;
pub mod synth;
pub mod verify;

pub use config::{ExperimentConfig, ModelKind};
pub use error::{ExpError, ExpResult};
pub use metrics::MetricRow;
