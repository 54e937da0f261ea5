//! Experiment harness for the virtual plasmodium.
//!
//! Each named experiment reproduces one growth scenario (competing
//! wavefronts, tube triangulation, spanning-tree foraging, post-completion
//! patrol, maze solving, mixed-substrate shaping, or the generated
//! phase-plane exemplars), scores it against the classical-geometry
//! oracles from `physarum-core`, and writes a deterministic artifact tree.

pub mod experiment;
pub mod render;
pub mod report;
pub mod scenes;

pub use experiment::{
    phase_space_exemplars, run_experiment, ExperimentSpec, ReportOptions, RunReport,
    EXPERIMENT_NAMES,
};
