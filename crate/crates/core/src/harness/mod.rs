//! Experiment configs, file formats and sweeps.

pub mod config;
pub mod io;
pub mod sweep;

pub use config::{ExperimentConfig, Mode, PolicyKind, Sparsity};
pub use sweep::{run_sweep, write_sweep, SweepResult, SweepRow};
