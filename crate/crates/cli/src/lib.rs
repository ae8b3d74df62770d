//! Experiment harness for the robust IRS beamforming library: configuration
//! parsing, training/evaluation loops for both agent modes, parameter
//! sweeps, runtime benchmarks, and a verification report.

pub mod benchmark;
pub mod config;
pub mod metrics;
pub mod sweep;
pub mod train;
pub mod verify;

pub use config::{ExperimentConfig, ModeName};
pub use metrics::MetricsRow;
