use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelParams, FadingMode};
use crate::detectloc::{DetectionMethod, SearchBounds};
use crate::error::{Result, SimError};
use crate::linkmetrics::NoiseModel;
use crate::policies::PolicyConfig;
use crate::scene::{NodeSpec, Role, Roster};

/// What the jamming detector compares against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMetric {
    /// Measured SINR, dB.
    Absolute,
    /// Measured SINR minus the interference-free SINR predicted from the
    /// mean channel, dB.
    #[default]
    RelativeToBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub enabled: bool,
    pub method: DetectionMethod,
    pub metric: DetectionMetric,
    pub threshold_db: f64,
    pub window_len: usize,
    pub k_mad: f64,
    /// When set, the first detection triggers an RSS localization of the
    /// jammer from the `uav_sensor` nodes, searched within these bounds.
    pub localization_bounds: Option<SearchBounds>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            method: DetectionMethod::Centralized,
            metric: DetectionMetric::RelativeToBaseline,
            threshold_db: -10.0,
            window_len: 10,
            k_mad: 3.0,
            localization_bounds: None,
        }
    }
}

/// A CSV column of the per-step output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputColumn {
    TS,
    UserXM,
    UserYM,
    UserZM,
    ServingBs,
    RateDirectBps,
    RateRelayBps,
    RateHotzoneBps,
    SecrecyDirectBps,
    SecrecyRelayBps,
    SecrecyHandoverBps,
    DetectFlags,
    MitigationState,
}

impl OutputColumn {
    pub const ALL: [OutputColumn; 13] = [
        OutputColumn::TS,
        OutputColumn::UserXM,
        OutputColumn::UserYM,
        OutputColumn::UserZM,
        OutputColumn::ServingBs,
        OutputColumn::RateDirectBps,
        OutputColumn::RateRelayBps,
        OutputColumn::RateHotzoneBps,
        OutputColumn::SecrecyDirectBps,
        OutputColumn::SecrecyRelayBps,
        OutputColumn::SecrecyHandoverBps,
        OutputColumn::DetectFlags,
        OutputColumn::MitigationState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutputColumn::TS => "t_s",
            OutputColumn::UserXM => "user_x_m",
            OutputColumn::UserYM => "user_y_m",
            OutputColumn::UserZM => "user_z_m",
            OutputColumn::ServingBs => "serving_bs",
            OutputColumn::RateDirectBps => "rate_direct_bps",
            OutputColumn::RateRelayBps => "rate_relay_bps",
            OutputColumn::RateHotzoneBps => "rate_hotzone_bps",
            OutputColumn::SecrecyDirectBps => "secrecy_direct_bps",
            OutputColumn::SecrecyRelayBps => "secrecy_relay_bps",
            OutputColumn::SecrecyHandoverBps => "secrecy_handover_bps",
            OutputColumn::DetectFlags => "detect_flags",
            OutputColumn::MitigationState => "mitigation_state",
        }
    }
}

fn default_timestep() -> f64 {
    0.1
}

fn default_bandwidth() -> f64 {
    1.0e7
}

fn default_outputs() -> Vec<OutputColumn> {
    OutputColumn::ALL.to_vec()
}

/// Complete declarative description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_s: f64,
    #[serde(default = "default_timestep")]
    pub timestep_s: f64,
    pub master_seed: u64,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub fading: FadingMode,
    #[serde(default)]
    pub policies: PolicyConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputColumn>,
}

const SCENARIO_A: &str = include_str!("../../scenarios/scenario_a.json");
const SCENARIO_B: &str = include_str!("../../scenarios/scenario_b.json");
const SCENARIO_SAFEZONE: &str = include_str!("../../scenarios/scenario_safezone.json");
const SCENARIO_UPLINK: &str = include_str!("../../scenarios/scenario_uplink.json");

/// Names of the scenario files shipped with the crate.
pub const BUNDLED_SCENARIOS: [&str; 4] = [
    "scenario_a",
    "scenario_b",
    "scenario_safezone",
    "scenario_uplink",
];

impl ScenarioConfig {
    /// Parses and validates a scenario from JSON text.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|source| SimError::Parse {
                path: origin.to_path_buf(),
                source,
            })?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    /// One of the scenarios shipped with the crate, by name.
    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name {
            "scenario_a" => SCENARIO_A,
            "scenario_b" => SCENARIO_B,
            "scenario_safezone" => SCENARIO_SAFEZONE,
            "scenario_uplink" => SCENARIO_UPLINK,
            other => {
                return Err(SimError::config(format!(
                    "no bundled scenario named '{other}'"
                )))
            }
        };
        Self::from_json(text, Path::new(name))
    }

    /// Folds dBW powers into dBm so the effective config has one unit.
    pub(crate) fn normalize(&mut self) {
        for n in &mut self.nodes {
            if n.tx_power_dbm.is_none() {
                if let Some(dbw) = n.tx_power_dbw.take() {
                    n.tx_power_dbm = Some(dbw + 30.0);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(SimError::config(format!(
                "duration_s must be > 0 (got {})",
                self.duration_s
            )));
        }
        if !(self.timestep_s > 0.0 && self.timestep_s.is_finite()) {
            return Err(SimError::config(format!(
                "timestep_s must be > 0 (got {})",
                self.timestep_s
            )));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(SimError::config("bandwidth_hz must be > 0"));
        }
        self.channel.validate()?;
        self.noise.validate()?;
        self.policies.validate()?;
        let roster = Roster::new(self.nodes.clone())?;
        let count = |role| roster.with_role(role).count();
        if count(Role::BaseStation) == 0 {
            return Err(SimError::config("scenario needs at least one base_station"));
        }
        if count(Role::User) == 0 {
            return Err(SimError::config("scenario needs at least one user"));
        }

        let p = &self.policies;
        let need = |flag: bool, role: Role, policy: &str| -> Result<()> {
            if flag && count(role) == 0 {
                Err(SimError::config(format!(
                    "policy {policy} is enabled but no {role} node exists"
                )))
            } else {
                Ok(())
            }
        };
        need(p.relay_enabled, Role::UavRelay, "relay")?;
        need(p.hotzone_enabled, Role::UavHotzone, "hotzone")?;
        need(p.safezone_enabled, Role::UavSafezone, "safezone")?;
        let is_bs = |id: &str| roster.get(id).is_some_and(|n| n.role == Role::BaseStation);
        if let Some(bs) = &p.initial_serving_bs {
            if !is_bs(bs) {
                return Err(SimError::config(format!(
                    "policies.initial_serving_bs '{bs}' is not a base_station"
                )));
            }
        }
        if let Some(up) = &p.uplink {
            let Some(aggr) = roster.get(&up.aggressor) else {
                return Err(SimError::config(format!(
                    "policies.uplink.aggressor '{}' does not exist",
                    up.aggressor
                )));
            };
            if aggr.role == Role::BaseStation || aggr.effective_tx_power_dbm().is_none() {
                return Err(SimError::config(format!(
                    "policies.uplink.aggressor '{}' must be a non-base-station node with tx power",
                    up.aggressor
                )));
            }
            if !is_bs(&up.serving_bs) {
                return Err(SimError::config(format!(
                    "policies.uplink.serving_bs '{}' is not a base_station",
                    up.serving_bs
                )));
            }
            if up.total_blocks < 2 || up.aggressor_blocks.len() >= up.total_blocks {
                return Err(SimError::config(
                    "policies.uplink needs blocks outside the aggressor allocation",
                ));
            }
        }

        let det = &self.detection;
        if det.window_len == 0 {
            return Err(SimError::config("detection.window_len must be >= 1"));
        }
        if !det.threshold_db.is_finite() || !(det.k_mad > 0.0) {
            return Err(SimError::config(
                "detection.threshold_db must be finite and detection.k_mad > 0",
            ));
        }
        if det.enabled && det.method == DetectionMethod::Distributed && count(Role::User) < 3 {
            return Err(SimError::config(
                "distributed detection needs at least 3 user nodes",
            ));
        }
        if let Some(b) = &det.localization_bounds {
            b.validate()
                .map_err(|e| SimError::config(format!("detection.localization_bounds: {e}")))?;
            if count(Role::UavSensor) < 4 || count(Role::Jammer) == 0 {
                return Err(SimError::config(
                    "jammer localization needs at least 4 uav_sensor nodes and a jammer",
                ));
            }
        }
        if self.outputs.is_empty() {
            return Err(SimError::config("outputs must select at least one column"));
        }
        Ok(())
    }

    /// Number of records a run produces: floor(duration / timestep) + 1.
    pub fn step_count(&self) -> usize {
        (self.duration_s / self.timestep_s + 1e-9).floor() as usize + 1
    }

    /// SHA-256 of the canonical JSON of the effective config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    ScenarioConfig::from_json(&text, path)
}
