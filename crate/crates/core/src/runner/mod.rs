//! Scenario files, architecture presets, experiment execution and sweeps.

mod experiment;
pub mod presets;
mod scenario;
mod sweep;

use thiserror::Error;

use crate::core5g::CoreError;
use crate::metrics::MetricsError;
use crate::placement::PlacementError;
use crate::topology::TopologyError;

pub use experiment::{build_setup, run_experiment, write_bundle, RunBundle};
pub use presets::{preset, Architecture, ArchitecturePreset, Inventory, LatencyProfile};
pub use scenario::{load_scenario, parse_scenario, scenario_from_value, Defaults, Flows, Scenario};
pub use sweep::{sweep, with_param, SweepPoint, SweepReport, SweepResult};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{path}`: {reason}")]
    Invalid { path: String, reason: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("io: {0}")]
    Io(String),
}

impl RunnerError {
    /// Stable identifier for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            RunnerError::Parse(_) => "parse",
            RunnerError::Invalid { .. } => "invalid",
            RunnerError::Topology(_) => "topology",
            RunnerError::Placement(_) => "placement",
            RunnerError::Core(_) => "core",
            RunnerError::Metrics(_) => "metrics",
            RunnerError::Sweep(_) => "sweep",
            RunnerError::Io(_) => "io",
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            RunnerError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}
