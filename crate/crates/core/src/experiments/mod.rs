//! Scenario configuration, the experiment sweeps and their CSV/JSON
//! emission.

pub mod config;
pub mod output;
pub mod sweeps;

pub use config::{load_scenario, ScenarioConfig};
pub use output::{emit_outputs, Cell, OutputFormat, RunManifest, Table};
