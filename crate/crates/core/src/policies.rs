//! Defense policies evaluated at every timestep: secrecy-driven base
//! station selection, relay selection, hot-zone combining, artificial-noise
//! safe zones and uplink interference mitigation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linkmetrics::{egc_combine, shannon_rate, LinkState, NoiseModel, SecrecyResult};
use crate::scene::{NodeSpec, Position3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayMode {
    /// Always report the relayed path.
    #[default]
    ForcedRelay,
    /// Report whichever of direct and relayed has the higher secrecy rate.
    BestOf,
}

/// Which transmissions of a relayed path an eavesdropper can overhear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveExposure {
    /// Source and relay hops; the stronger one counts.
    #[default]
    BothHops,
    RelayHopOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SectorCenters {
    /// One sector pointed at every known eavesdropper.
    Auto(AutoKeyword),
    /// Azimuths in degrees.
    Azimuths(Vec<f64>),
}

impl Default for SectorCenters {
    fn default() -> Self {
        SectorCenters::Auto(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SafeZoneConfig {
    pub an_power_dbm: f64,
    pub sector_width_deg: f64,
    pub guard_angle_deg: f64,
    pub sector_centers: SectorCenters,
}

impl Default for SafeZoneConfig {
    fn default() -> Self {
        Self {
            an_power_dbm: 20.0,
            sector_width_deg: 30.0,
            guard_angle_deg: 10.0,
            sector_centers: SectorCenters::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationKind {
    Deny,
    DedicatedResources,
    #[default]
    PowerControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UplinkConfig {
    /// Airborne user whose uplink is watched.
    pub aggressor: String,
    /// Base station the aggressor is attached to; every other base station
    /// is a potential victim.
    pub serving_bs: String,
    #[serde(default = "default_threshold_dbm")]
    pub interference_threshold_dbm: f64,
    #[serde(default)]
    pub mitigation: MitigationKind,
    #[serde(default = "default_total_blocks")]
    pub total_blocks: usize,
    #[serde(default = "default_aggressor_blocks")]
    pub aggressor_blocks: Vec<usize>,
    #[serde(default = "default_dedicated_share")]
    pub dedicated_share: f64,
    /// Per-block interference floor reported by victims without the UAV.
    #[serde(default = "default_background_dbm")]
    pub background_interference_dbm: f64,
}

fn default_threshold_dbm() -> f64 {
    -90.0
}
fn default_total_blocks() -> usize {
    50
}
fn default_aggressor_blocks() -> Vec<usize> {
    (0..5).collect()
}
fn default_dedicated_share() -> f64 {
    0.1
}
fn default_background_dbm() -> f64 {
    -110.0
}

impl UplinkConfig {
    pub fn new(aggressor: impl Into<String>, serving_bs: impl Into<String>, kind: MitigationKind) -> Self {
        Self {
            aggressor: aggressor.into(),
            serving_bs: serving_bs.into(),
            interference_threshold_dbm: default_threshold_dbm(),
            mitigation: kind,
            total_blocks: default_total_blocks(),
            aggressor_blocks: default_aggressor_blocks(),
            dedicated_share: default_dedicated_share(),
            background_interference_dbm: default_background_dbm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub relay_enabled: bool,
    pub handover_enabled: bool,
    pub hotzone_enabled: bool,
    pub safezone_enabled: bool,
    /// Base station used for direct transmission; lowest id when absent.
    pub initial_serving_bs: Option<String>,
    pub hysteresis_bps: f64,
    pub relay_mode: RelayMode,
    /// Halve the relayed rate for a half-duplex relay.
    pub relay_half_duplex: bool,
    pub eve_exposure: EveExposure,
    /// Hot-zone receiver falls back to the best single branch when EGC is worse.
    pub egc_fallback: bool,
    pub safezone: SafeZoneConfig,
    pub uplink: Option<UplinkConfig>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            relay_enabled: false,
            handover_enabled: false,
            hotzone_enabled: false,
            safezone_enabled: false,
            initial_serving_bs: None,
            hysteresis_bps: 0.0,
            relay_mode: RelayMode::default(),
            relay_half_duplex: false,
            eve_exposure: EveExposure::default(),
            egc_fallback: true,
            safezone: SafeZoneConfig::default(),
            uplink: None,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let sz = &self.safezone;
        if !(sz.sector_width_deg > 0.0 && sz.sector_width_deg <= 180.0) {
            return Err(SimError::config(format!(
                "policies.safezone.sector_width_deg must lie in (0, 180] (got {})",
                sz.sector_width_deg
            )));
        }
        if !(sz.guard_angle_deg >= 0.0 && sz.guard_angle_deg.is_finite()) {
            return Err(SimError::config("policies.safezone.guard_angle_deg must be >= 0"));
        }
        if !sz.an_power_dbm.is_finite() {
            return Err(SimError::config("policies.safezone.an_power_dbm must be finite"));
        }
        if let SectorCenters::Azimuths(list) = &sz.sector_centers {
            if list.iter().any(|a| !a.is_finite()) {
                return Err(SimError::config("policies.safezone.sector_centers must be finite"));
            }
        }
        if !(self.hysteresis_bps >= 0.0 && self.hysteresis_bps.is_finite()) {
            return Err(SimError::config("policies.hysteresis_bps must be >= 0"));
        }
        if let Some(up) = &self.uplink {
            if !up.interference_threshold_dbm.is_finite() {
                return Err(SimError::config(
                    "policies.uplink.interference_threshold_dbm must be finite",
                ));
            }
            if up.total_blocks == 0 || up.aggressor_blocks.is_empty() {
                return Err(SimError::config(
                    "policies.uplink needs at least one block and one aggressor block",
                ));
            }
            if up.aggressor_blocks.iter().any(|&b| b >= up.total_blocks) {
                return Err(SimError::config(
                    "policies.uplink.aggressor_blocks must be < total_blocks",
                ));
            }
            if !(0.0..1.0).contains(&up.dedicated_share) {
                return Err(SimError::config("policies.uplink.dedicated_share must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServingReason {
    Initial,
    SecrecyHandover,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServingDecision {
    pub serving_bs: String,
    pub reason: ServingReason,
}

/// Picks the base station with the highest secrecy rate.
///
/// Without a current decision the best candidate is chosen, ties going to
/// the lowest id. With one, the user only switches on a strict improvement
/// of at least `hysteresis_bps`, so an exact tie keeps the current cell.
pub fn select_serving_bs(
    candidates: &[(String, SecrecyResult)],
    current: Option<&ServingDecision>,
    hysteresis_bps: f64,
) -> Result<ServingDecision> {
    let best = candidates
        .iter()
        .reduce(|best, c| {
            let (b, s) = (best.1.secrecy_rate_bps, c.1.secrecy_rate_bps);
            if s > b || (s == b && c.0 < best.0) {
                c
            } else {
                best
            }
        })
        .ok_or_else(|| SimError::domain("no candidate base stations"))?;

    let Some(current) = current else {
        return Ok(ServingDecision {
            serving_bs: best.0.clone(),
            reason: ServingReason::Initial,
        });
    };
    let handover = ServingDecision {
        serving_bs: best.0.clone(),
        reason: ServingReason::SecrecyHandover,
    };
    match candidates.iter().find(|c| c.0 == current.serving_bs) {
        None => Ok(handover),
        Some(cur) => {
            let gain = best.1.secrecy_rate_bps - cur.1.secrecy_rate_bps;
            if best.0 != cur.0 && gain > 0.0 && gain >= hysteresis_bps {
                Ok(handover)
            } else {
                Ok(current.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayChoice {
    Direct,
    Relayed,
}

pub fn evaluate_relay_option(
    direct: SecrecyResult,
    relayed: SecrecyResult,
    mode: RelayMode,
) -> (SecrecyResult, RelayChoice) {
    match mode {
        RelayMode::ForcedRelay => (relayed, RelayChoice::Relayed),
        RelayMode::BestOf if relayed.secrecy_rate_bps > direct.secrecy_rate_bps => {
            (relayed, RelayChoice::Relayed)
        }
        RelayMode::BestOf => (direct, RelayChoice::Direct),
    }
}

/// SINR of the two-branch hot-zone receiver for one set of received powers.
/// The jammer enters both branches since they share one receiver.
pub fn hotzone_sinr(bs_rx_w: f64, uav_rx_w: f64, jammer_w: f64, noise_w: f64, egc_fallback: bool) -> f64 {
    let impairment = noise_w + jammer_w;
    let a = bs_rx_w.sqrt() + uav_rx_w.sqrt();
    let egc = a * a / (2.0 * impairment);
    if egc_fallback {
        egc.max(bs_rx_w.max(uav_rx_w) / impairment)
    } else {
        egc
    }
}

pub fn hotzone_rate(
    bs_branch: &LinkState,
    uav_branch: &LinkState,
    jammer_rx_powers_per_branch: &[f64],
    noise: &NoiseModel,
    bandwidth_hz: f64,
    egc_fallback: bool,
) -> Result<f64> {
    if bs_branch.rx != uav_branch.rx {
        return Err(SimError::domain(format!(
            "hot-zone branches reach different receivers ('{}' and '{}')",
            bs_branch.rx, uav_branch.rx
        )));
    }
    let powers = [bs_branch.rx_power_w, uav_branch.rx_power_w];
    let amps = powers.map(f64::sqrt);
    let noise_w = [noise.noise_power_w; 2];
    let mut sinr = egc_combine(&amps, &noise_w, jammer_rx_powers_per_branch)?;
    if egc_fallback {
        for (p, j) in powers.iter().zip(jammer_rx_powers_per_branch) {
            sinr = sinr.max(p / (noise.noise_power_w + j));
        }
    }
    Ok(shannon_rate(sinr, bandwidth_hz))
}

/// Geometry a safe zone is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct SafeZoneGeometry<'a> {
    pub an_position: Position3D,
    pub user_position: Position3D,
    pub eve_positions: &'a [Position3D],
}

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Which eavesdroppers fall inside an artificial-noise sector and outside
/// the guard angle around the protected user.
pub fn safezone_coverage(config: &SafeZoneConfig, geometry: &SafeZoneGeometry<'_>) -> Vec<bool> {
    let an = geometry.an_position;
    let centers: Vec<f64> = match &config.sector_centers {
        SectorCenters::Auto(_) => geometry
            .eve_positions
            .iter()
            .filter_map(|e| an.azimuth_to(e))
            .collect(),
        SectorCenters::Azimuths(list) => list.clone(),
    };
    let user_az = an.azimuth_to(&geometry.user_position);
    geometry
        .eve_positions
        .iter()
        .map(|eve| match an.azimuth_to(eve) {
            // directly below the noise source
            None => user_az.is_some(),
            Some(az) => {
                let in_sector = centers
                    .iter()
                    .any(|c| angle_between(az, *c) <= config.sector_width_deg / 2.0);
                let guarded = user_az.is_some_and(|u| angle_between(az, u) < config.guard_angle_deg);
                in_sector && !guarded
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeZoneOutcome {
    pub covered: Vec<bool>,
    /// Artificial-noise power added at each eavesdropper, watts.
    pub added_interference_w: Vec<f64>,
    pub eve_links: Vec<LinkState>,
}

/// Adds artificial noise to every covered eavesdropper link. The protected
/// user is nulled, so its links are never touched.
pub fn safezone_apply(
    eve_links: &[LinkState],
    an_rx_power_w: &[f64],
    config: &SafeZoneConfig,
    geometry: &SafeZoneGeometry<'_>,
    noise: &NoiseModel,
    bandwidth_hz: f64,
) -> Result<SafeZoneOutcome> {
    if eve_links.len() != an_rx_power_w.len() || eve_links.len() != geometry.eve_positions.len() {
        return Err(SimError::domain(
            "safe zone needs one AN power and one position per eavesdropper link",
        ));
    }
    let covered = safezone_coverage(config, geometry);
    let added: Vec<f64> = covered
        .iter()
        .zip(an_rx_power_w)
        .map(|(&c, &p)| if c { p } else { 0.0 })
        .collect();
    let eve_links = eve_links
        .iter()
        .zip(&added)
        .map(|(l, &extra)| {
            if extra > 0.0 {
                l.with_added_interference(extra, noise, bandwidth_hz)
            } else {
                l.clone()
            }
        })
        .collect();
    Ok(SafeZoneOutcome {
        covered,
        added_interference_w: added,
        eve_links,
    })
}

/// Interference a victim base station reports for the aggressor's uplink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimReport {
    pub bs_id: String,
    pub interference_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MitigationOutcome {
    Unchanged,
    /// The aggressor gets no resources; its tx power is effectively -inf.
    Denied,
    PowerReduced {
        reduction_db: f64,
        new_tx_power_dbm: f64,
    },
    /// The aggressor's blocks are excluded at every victim, which lose
    /// `victim_bandwidth_share` of their usable bandwidth.
    DedicatedResources {
        excluded_blocks: Vec<usize>,
        victim_bandwidth_share: f64,
    },
}

impl MitigationOutcome {
    /// Interference left at a victim that saw `nominal_dbm` before mitigation.
    pub fn residual_interference_dbm(&self, nominal_dbm: f64) -> f64 {
        match self {
            MitigationOutcome::Unchanged => nominal_dbm,
            MitigationOutcome::PowerReduced { reduction_db, .. } => nominal_dbm - reduction_db,
            MitigationOutcome::Denied | MitigationOutcome::DedicatedResources { .. } => {
                f64::NEG_INFINITY
            }
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, MitigationOutcome::Unchanged)
    }

    pub fn label(&self) -> String {
        match self {
            MitigationOutcome::Unchanged => "none".into(),
            MitigationOutcome::Denied => "deny".into(),
            MitigationOutcome::PowerReduced { reduction_db, .. } => {
                format!("power_control:-{reduction_db:.3}dB")
            }
            MitigationOutcome::DedicatedResources {
                victim_bandwidth_share,
                ..
            } => format!("dedicated_resources:{victim_bandwidth_share}"),
        }
    }
}

/// Reacts to victim interference reports about an identified aggressor.
/// Nothing changes while every victim is at or below the threshold.
pub fn mitigate_uplink(
    victim_reports: &[VictimReport],
    aggressor_id: &str,
    roster: &[NodeSpec],
    config: &UplinkConfig,
) -> Result<MitigationOutcome> {
    let aggressor = roster
        .iter()
        .find(|n| n.id == aggressor_id)
        .ok_or_else(|| SimError::domain(format!("unknown aggressor '{aggressor_id}'")))?;
    let worst = victim_reports
        .iter()
        .map(|r| r.interference_dbm)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = config.interference_threshold_dbm;
    if !(worst > threshold) {
        return Ok(MitigationOutcome::Unchanged);
    }
    Ok(match config.mitigation {
        MitigationKind::Deny => MitigationOutcome::Denied,
        MitigationKind::DedicatedResources => MitigationOutcome::DedicatedResources {
            excluded_blocks: config.aggressor_blocks.clone(),
            victim_bandwidth_share: config.dedicated_share,
        },
        MitigationKind::PowerControl => {
            let power = aggressor.effective_tx_power_dbm().ok_or_else(|| {
                SimError::domain(format!("aggressor '{aggressor_id}' has no tx power"))
            })?;
            let reduction_db = worst - threshold;
            MitigationOutcome::PowerReduced {
                reduction_db,
                new_tx_power_dbm: power - reduction_db,
            }
        }
    })
}
