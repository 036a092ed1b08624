//! Link gains: large-scale path loss, probabilistic line of sight for
//! air-to-ground links and seeded small-scale fading.
//!
//! Ground links use a log-distance model anchored at the free-space loss at
//! the reference distance. Air-to-ground links use free-space loss plus an
//! excess loss that depends on whether the link is realized as LoS or NLoS,
//! with the LoS probability given by a logistic function of the elevation
//! angle. Fading is Rayleigh for ground and NLoS links, Rician for LoS
//! links with an aerial endpoint. All fading is normalized to unit power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};
use crate::scene::{distance, Position3D, Role};

/// Free-space constant 20·log10(4π/c) for distance in m and frequency in Hz.
pub const FSPL_CONSTANT_DB: f64 = -147.55;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub carrier_frequency_hz: f64,
    pub ground_pathloss_exponent: f64,
    pub reference_distance_m: f64,
    /// Logistic LoS-probability constants (urban defaults).
    pub a2g_a: f64,
    pub a2g_b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    /// Rician K factor of the LoS branch of aerial links.
    pub rician_k_db: f64,
    pub fading_samples_per_step: usize,
    /// Non-infrastructure nodes at or above this height are aerial.
    pub aerial_height_threshold_m: f64,
    /// Draw fresh fading for every timestep instead of reusing each link's
    /// sample set along the run.
    pub resample_each_step: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 2.0e9,
            ground_pathloss_exponent: 3.5,
            reference_distance_m: 1.0,
            a2g_a: 9.61,
            a2g_b: 0.16,
            eta_los_db: 1.0,
            eta_nlos_db: 20.0,
            rician_k_db: 10.0,
            fading_samples_per_step: 1000,
            aerial_height_threshold_m: 10.0,
            resample_each_step: false,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("reference_distance_m", self.reference_distance_m),
            ("a2g_a", self.a2g_a),
            ("a2g_b", self.a2g_b),
            ("eta_los_db", self.eta_los_db),
            ("eta_nlos_db", self.eta_nlos_db),
            ("rician_k_db", self.rician_k_db),
            ("aerial_height_threshold_m", self.aerial_height_threshold_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::config(format!(
                    "channel.{name} must be positive and finite (got {v})"
                )));
            }
        }
        if !(2.0..=6.0).contains(&self.ground_pathloss_exponent) {
            return Err(SimError::config(format!(
                "channel.ground_pathloss_exponent must lie in [2, 6] (got {})",
                self.ground_pathloss_exponent
            )));
        }
        if self.fading_samples_per_step == 0 {
            return Err(SimError::config(
                "channel.fading_samples_per_step must be >= 1",
            ));
        }
        Ok(())
    }

    pub fn rician_k_linear(&self) -> f64 {
        10f64.powf(self.rician_k_db / 10.0)
    }

    pub fn is_aerial(&self, role: Role, position: &Position3D) -> bool {
        role != Role::BaseStation && position.z >= self.aerial_height_threshold_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    GroundGround,
    AirGround,
    AirAir,
}

impl LinkClass {
    pub fn from_endpoints(tx_aerial: bool, rx_aerial: bool) -> Self {
        match (tx_aerial, rx_aerial) {
            (false, false) => LinkClass::GroundGround,
            (true, true) => LinkClass::AirAir,
            _ => LinkClass::AirGround,
        }
    }
}

/// Whether small-scale fading is drawn or replaced by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    #[default]
    On,
    /// Amplitude fixed at 1; A2G links are LoS iff their LoS probability is
    /// at least one half (elevation above the logistic midpoint).
    Off,
}

/// Free-space path loss in dB.
pub fn fspl_db(distance_m: f64, frequency_hz: f64) -> f64 {
    20.0 * distance_m.log10() + 20.0 * frequency_hz.log10() + FSPL_CONSTANT_DB
}

/// Large-scale loss at a known distance. No domain checks.
pub(crate) fn path_loss_at(d: f64, class: LinkClass, params: &ChannelParams, los: bool) -> f64 {
    match class {
        LinkClass::GroundGround => {
            let d0 = params.reference_distance_m;
            fspl_db(d0, params.carrier_frequency_hz)
                + 10.0 * params.ground_pathloss_exponent * (d / d0).log10()
        }
        LinkClass::AirGround | LinkClass::AirAir => {
            let eta = if los {
                params.eta_los_db
            } else {
                params.eta_nlos_db
            };
            fspl_db(d, params.carrier_frequency_hz) + eta
        }
    }
}

pub fn path_loss_db(
    tx: &Position3D,
    rx: &Position3D,
    class: LinkClass,
    params: &ChannelParams,
    los_realized: bool,
) -> Result<f64> {
    let d = distance(tx, rx);
    if !(d > 0.0) {
        return Err(SimError::domain(format!(
            "path loss undefined for coincident endpoints {tx}"
        )));
    }
    Ok(path_loss_at(d, class, params, los_realized))
}

fn logistic_los(theta_deg: f64, params: &ChannelParams) -> f64 {
    1.0 / (1.0 + params.a2g_a * (-params.a2g_b * (theta_deg - params.a2g_a)).exp())
}

pub fn los_probability(theta_deg: f64, params: &ChannelParams) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(SimError::domain(format!(
            "elevation {theta_deg} deg outside (0, 90]"
        )));
    }
    Ok(logistic_los(theta_deg, params))
}

/// Elevation between the two endpoints, measured from the lower one, in
/// [0, 90] degrees. Coincident or vertically stacked endpoints give 90.
pub fn link_elevation_deg(a: &Position3D, b: &Position3D) -> f64 {
    let h = a.horizontal_distance(b);
    let dz = (a.z - b.z).abs();
    if h == 0.0 {
        90.0
    } else {
        dz.atan2(h).to_degrees()
    }
}

fn link_los_probability(class: LinkClass, elevation_deg: f64, params: &ChannelParams) -> f64 {
    match class {
        LinkClass::GroundGround => 0.0,
        LinkClass::AirGround => logistic_los(elevation_deg, params),
        LinkClass::AirAir => 1.0,
    }
}

/// Fading-averaged loss: the LoS/NLoS mixture for aerial links, the
/// deterministic loss for ground links. Distances below the reference
/// distance are floored to it.
pub fn mean_path_loss_db(
    tx: &Position3D,
    rx: &Position3D,
    class: LinkClass,
    params: &ChannelParams,
) -> f64 {
    let d = distance(tx, rx).max(params.reference_distance_m);
    match class {
        LinkClass::GroundGround => path_loss_at(d, class, params, false),
        _ => {
            let p = link_los_probability(class, link_elevation_deg(tx, rx), params);
            let g = p * db_to_gain(-path_loss_at(d, class, params, true))
                + (1.0 - p) * db_to_gain(-path_loss_at(d, class, params, false));
            -10.0 * g.log10()
        }
    }
}

fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Small-scale fading amplitude (linear voltage gain, unit mean power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingDraw {
    pub amplitude: f64,
}

impl FadingDraw {
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Draws one fading amplitude. Always consumes exactly two normals so that
/// streams stay aligned whatever the LoS outcome.
pub fn draw_fading<R: Rng + ?Sized>(
    class: LinkClass,
    los_realized: bool,
    params: &ChannelParams,
    rng: &mut R,
) -> FadingDraw {
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    let amplitude = if los_realized && class != LinkClass::GroundGround {
        let k = params.rician_k_linear();
        let los = (k / (k + 1.0)).sqrt();
        let sigma = (0.5 / (k + 1.0)).sqrt();
        (los + sigma * n1).hypot(sigma * n2)
    } else {
        (0.5 * (n1 * n1 + n2 * n2)).sqrt()
    };
    FadingDraw { amplitude }
}

/// One realized link: LoS state, fading draw and resulting power gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRealization {
    pub los: bool,
    pub fading: FadingDraw,
    pub gain: f64,
}

fn realize<R: Rng + ?Sized>(
    d: f64,
    los_probability: f64,
    class: LinkClass,
    params: &ChannelParams,
    mode: FadingMode,
    rng: &mut R,
) -> LinkRealization {
    match mode {
        FadingMode::On => {
            let u: f64 = rng.gen();
            let los = u < los_probability;
            let fading = draw_fading(class, los, params, rng);
            let gain = db_to_gain(-path_loss_at(d, class, params, los)) * fading.power();
            LinkRealization { los, fading, gain }
        }
        FadingMode::Off => {
            let los = los_probability >= 0.5;
            LinkRealization {
                los,
                fading: FadingDraw { amplitude: 1.0 },
                gain: db_to_gain(-path_loss_at(d, class, params, los)),
            }
        }
    }
}

/// Realizes one link: Bernoulli LoS for aerial links, then fading.
pub fn realize_link<R: Rng + ?Sized>(
    tx: &Position3D,
    rx: &Position3D,
    class: LinkClass,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<LinkRealization> {
    let d = distance(tx, rx);
    if !(d > 0.0) {
        return Err(SimError::domain(format!(
            "link gain undefined for coincident endpoints {tx}"
        )));
    }
    let p = link_los_probability(class, link_elevation_deg(tx, rx), params);
    Ok(realize(d, p, class, params, FadingMode::On, rng))
}

/// Power gain of one realized link.
pub fn link_gain_linear<R: Rng + ?Sized>(
    tx: &Position3D,
    rx: &Position3D,
    class: LinkClass,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64> {
    realize_link(tx, rx, class, params, rng).map(|r| r.gain)
}

/// `n` independent gain samples for one link. The distance is floored at
/// the reference distance so that co-located nodes stay finite.
pub fn sample_link_gains<R: Rng + ?Sized>(
    tx: &Position3D,
    rx: &Position3D,
    class: LinkClass,
    params: &ChannelParams,
    mode: FadingMode,
    rng: &mut R,
    n: usize,
) -> Vec<f64> {
    let d = distance(tx, rx).max(params.reference_distance_m);
    let p = link_los_probability(class, link_elevation_deg(tx, rx), params);
    (0..n)
        .map(|_| realize(d, p, class, params, mode, rng).gain)
        .collect()
}

/// Deterministic random stream keyed by the master seed, a link key and a
/// step key. Streams for different keys are independent, so adding a link
/// never perturbs the draws of another.
pub fn substream(master_seed: u64, key: &str, step: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"uavsec/substream/v1");
    h.update(master_seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update(step.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
