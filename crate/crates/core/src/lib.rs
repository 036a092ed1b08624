//! Deterministic link-level simulator for UAV-assisted security in
//! cellular radio access networks.
//!
//! The crate is organized bottom-up:
//! - [`scene`]: node roster, positions and mobility
//! - [`channel`]: path loss, line-of-sight probability and fading
//! - [`linkmetrics`]: SINR, equal gain combining, Shannon and secrecy rates
//! - [`policies`]: handover, relaying, hot zones, safe zones, uplink mitigation
//! - [`detectloc`]: jamming detection, RSS localization, aggressor identification
//! - [`engine`]: scenario files, the time-stepped run loop, outputs and sweeps

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detectloc;
pub mod engine;
pub mod error;
pub mod linkmetrics;
pub mod policies;
pub mod scene;

pub use channel::{ChannelParams, FadingMode, LinkClass};
pub use engine::{
    emit, load_scenario, run, run_with_threads, sweep, OutputColumn, OutputFormat, RunOutput,
    RunSummary, ScenarioConfig, StepRecord, SweepRow,
};
pub use error::{Result, SimError};
pub use linkmetrics::{LinkState, NoiseModel, SecrecyResult};
pub use policies::PolicyConfig;
pub use scene::{NodeSpec, Position3D, Role, Vec3};
