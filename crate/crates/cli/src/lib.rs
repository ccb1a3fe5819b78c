//! Batch experiment runner for the Newton-Schur solver: mesh sweeps,
//! convergence tables and CSV reporting.

pub mod config;
pub mod experiment;

pub use config::{parse_mesh_size, Cli, ConfigFile};
pub use experiment::{fit_slope, run_experiment, ExperimentReport, ExperimentSpec, SweepKind};
