//! Scenario files, the time-stepped run loop, result emission and
//! parameter sweeps.
//!
//! Every step evaluates the enabled policies in a fixed order: safe zone,
//! then relay and serving-cell selection, then hot zone, then uplink
//! mitigation. Detection runs last on the step's fading-averaged SINR.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{
    load_scenario, DetectionConfig, DetectionMetric, OutputColumn, ScenarioConfig,
    BUNDLED_SCENARIOS,
};
pub use output::{csv_string, emit, ordered_columns, write_csv, OutputFormat};
pub use run::{run, run_with_threads, CurveStats, LinkMetric, RunOutput, RunSummary, StepRecord};
pub use sweep::{sweep, with_parameter, SweepRow};
