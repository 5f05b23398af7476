//! Experiment orchestration over `pregeomzol_core`: configuration, runners,
//! reports and reproducibility manifests.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod trend;
pub mod xi_report;

pub use config::{load, ExperimentKind, ExperimentSpec, Overrides};
pub use error::{HarnessError, Result};
pub use experiments::{rerun, run, RerunReport, RunReport};
