//! Scenario loading, runs, sweeps and CSV export.

mod config;
mod fit;
mod run;
mod sweep;

pub use config::{
    load_scenario, parse_duration, parse_scenario, scenarios_dir, ConfigError, ConfigErrors,
    CtConfig, CtPlacement, RunConfig, ScenarioConfig, ServiceConfig, SubscriptionConfig,
    SweepParam, TopologyConfig,
};
pub use fit::{fit_two_segments, PiecewiseFit};
pub use run::{run_scenario, run_seeds, setup_csv, write_runs, RunRecord, SCHEMA_VERSION};
pub use sweep::{percentile, sweep, write_sweep_csv, SweepAxis, SweepRow};

use std::path::PathBuf;

use crate::net::StreamId;
use crate::scenario::{compute_avb_latency_bound, ScenarioError};
use crate::sim::{SimDuration, SimTime};
use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("invalid scenario:\n{0}")]
    Invalid(ConfigErrors),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("run aborted at {} ns: {source}", at.as_nanos())]
    Aborted {
        at: SimTime,
        #[source]
        source: WorldError,
    },
    #[error("parameter `{param}` does not apply to scenario `{scenario}`")]
    InapplicableParameter { param: SweepParam, scenario: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

/// Analytic worst-case latency of a reserved stream in the scenario.
pub fn scenario_bound(cfg: &ScenarioConfig, stream: StreamId) -> Result<SimDuration, HarnessError> {
    let topo = cfg.topology_description()?;
    Ok(compute_avb_latency_bound(&topo, stream, &cfg.model)?)
}
