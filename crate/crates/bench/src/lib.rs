//! Seeded experiment harness behind the `r1` command-line tool.

pub mod config;
pub mod design_report;
pub mod error;
pub mod experiments;
pub mod output;
pub mod pool;
pub mod verify;

pub use config::{ExperimentConfig, Kind, TrialRecord};
pub use error::{BenchError, Result};
pub use experiments::{run_noise_sweep, run_phase_diagram, run_tomography, ExperimentOutput};
pub use design_report::run_design_report;
pub use verify::run_verify_suite;
