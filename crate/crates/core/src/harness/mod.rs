//! Monte-Carlo experiment drivers.

pub mod config;
pub mod experiments;
pub mod instance;
pub mod seeds;
pub mod table;

pub use config::{ExperimentConfig, ScenarioKind};
pub use experiments::{
    debug_bundle, mmin_search, run_scenario, DebugBundle, MminOutcome, Progress,
};
pub use instance::{fresh_instance, InstanceSpec};
pub use table::ResultTable;
