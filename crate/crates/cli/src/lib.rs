//! Experiment configuration, presets and the seed-parallel runner.

pub mod config;
pub mod runner;

pub use config::{preset, preset_names, ExperimentConfig, FitWindow, TrajectorySource};
pub use runner::{run_experiment, ExperimentOutcome, RunManifest, ThresholdResult};
