use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectionMetric, ScenarioConfig};
use crate::channel::{mean_path_loss_db, sample_link_gains, substream, FadingMode, LinkClass};
use crate::detectloc::{
    detect_centralized, detect_distributed, identify_uplink_aggressor, rss_localize, BlockReport,
    DetectionMethod, LocalizationEstimate, MetricWindow, RssMeasurement,
};
use crate::error::{Result, SimError};
use crate::linkmetrics::{
    dbm_to_watts, linear_to_db, relay_path_rate, secrecy_rate, shannon_rate, watts_to_dbm,
    SecrecyResult,
};
use crate::policies::{
    evaluate_relay_option, hotzone_sinr, mitigate_uplink, safezone_coverage, select_serving_bs,
    EveExposure, MitigationKind, MitigationOutcome, SafeZoneGeometry, ServingDecision,
    VictimReport,
};
use crate::scene::{Position3D, Role, Roster};

/// Fading-averaged metrics of one transmitter→receiver link at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetric {
    pub tx: String,
    pub rx: String,
    pub mean_sinr_db: f64,
    pub rate_bps: f64,
}

/// Snapshot of one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t_s: f64,
    pub user_id: String,
    pub user_position: Position3D,
    pub positions: BTreeMap<String, Position3D>,
    pub serving_bs: String,
    pub links: Vec<LinkMetric>,
    /// Initial serving base station to the user, no defenses except safe
    /// zones.
    pub secrecy_direct: SecrecyResult,
    pub relay: Option<SecrecyResult>,
    pub rate_hotzone_bps: Option<f64>,
    pub handover: Option<SecrecyResult>,
    /// Value each user's detector saw this step, dB.
    pub detection_metric_db: BTreeMap<String, f64>,
    pub detect_flags: Vec<String>,
    pub mitigation_state: String,
    /// Uplink interference from the aggressor at each victim after
    /// mitigation, watts.
    pub uplink_interference_w: BTreeMap<String, f64>,
    /// The same interference had the aggressor kept its configured power.
    pub uplink_unmitigated_w: BTreeMap<String, f64>,
    pub covered_eavesdroppers: Vec<String>,
}

impl StepRecord {
    pub fn rate_direct_bps(&self) -> f64 {
        self.secrecy_direct.legit_rate_bps
    }

    pub fn rate_relay_bps(&self) -> Option<f64> {
        self.relay.map(|r| r.legit_rate_bps)
    }

    pub fn secrecy_direct_bps(&self) -> f64 {
        self.secrecy_direct.secrecy_rate_bps
    }

    pub fn secrecy_relay_bps(&self) -> Option<f64> {
        self.relay.map(|r| r.secrecy_rate_bps)
    }

    pub fn secrecy_handover_bps(&self) -> Option<f64> {
        self.handover.map(|r| r.secrecy_rate_bps)
    }

    pub fn link(&self, tx: &str, rx: &str) -> Option<&LinkMetric> {
        self.links.iter().find(|l| l.tx == tx && l.rx == rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl CurveStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Aggregates of a run. Everything except the identity fields can be
/// recomputed from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub config_digest: String,
    pub steps: usize,
    /// Keyed by output column name.
    pub curves: BTreeMap<String, CurveStats>,
    pub handover_count: usize,
    pub handover_times_s: Vec<f64>,
    /// Time of the first flag raised against each node.
    pub detection_latencies_s: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn from_records(records: &[StepRecord], config: &ScenarioConfig) -> Self {
        let mut curves = BTreeMap::new();
        let mut add = |name: &str, values: Option<Vec<f64>>| {
            if let Some(stats) = values.and_then(|v| CurveStats::of(&v)) {
                curves.insert(name.to_string(), stats);
            }
        };
        add("rate_direct_bps", Some(records.iter().map(|r| r.rate_direct_bps()).collect()));
        add("rate_relay_bps", records.iter().map(|r| r.rate_relay_bps()).collect());
        add("rate_hotzone_bps", records.iter().map(|r| r.rate_hotzone_bps).collect());
        add("secrecy_direct_bps", Some(records.iter().map(|r| r.secrecy_direct_bps()).collect()));
        add("secrecy_relay_bps", records.iter().map(|r| r.secrecy_relay_bps()).collect());
        add("secrecy_handover_bps", records.iter().map(|r| r.secrecy_handover_bps()).collect());

        let handover_times_s: Vec<f64> = records
            .windows(2)
            .filter(|w| w[0].serving_bs != w[1].serving_bs)
            .map(|w| w[1].t_s)
            .collect();
        let mut detection_latencies_s = BTreeMap::new();
        for r in records {
            for id in &r.detect_flags {
                detection_latencies_s.entry(id.clone()).or_insert(r.t_s);
            }
        }
        Self {
            scenario: config.name.clone(),
            seed: config.master_seed,
            config_digest: config.digest(),
            steps: records.len(),
            curves,
            handover_count: handover_times_s.len(),
            handover_times_s,
            detection_latencies_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    /// Jammer position estimated by the sensor UAVs at the first detection.
    pub jammer_localization: Option<LocalizationEstimate>,
}

/// Runs a scenario on the global thread pool.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    Simulation::new(config)?.run()
}

/// Runs a scenario on a dedicated pool of `threads` workers (0 picks the
/// default). The output does not depend on the thread count.
pub fn run_with_threads(config: &ScenarioConfig, threads: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run(config))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check(value: f64, step: usize, link: &str, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SimError::Numeric {
            step,
            link: link.to_string(),
            detail: format!("{what} is {value}"),
        })
    }
}

/// Fading-averaged SINR and rate of a link given per-draw gains and
/// per-draw interference at the receiver.
struct Averaged {
    mean_sinr: f64,
    rate_bps: f64,
}

struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    roster: Roster,
    ids: Vec<String>,
    power_w: Vec<f64>,
    user: usize,
    users: Vec<usize>,
    bss: Vec<usize>,
    initial_bs: usize,
    eves: Vec<usize>,
    jammers: Vec<usize>,
    sensors: Vec<usize>,
    relay: Option<usize>,
    hotzone: Option<usize>,
    safezone: Option<usize>,
    aggressor: Option<usize>,
    victims: Vec<usize>,
    links: Vec<(usize, usize)>,
    link_index: HashMap<(usize, usize), usize>,
    draws: usize,
}

/// Per-step gain samples, one vector per sampled link.
struct StepGains<'s> {
    sim: &'s Simulation<'s>,
    samples: Vec<Vec<f64>>,
}

impl StepGains<'_> {
    fn get(&self, tx: usize, rx: usize) -> &[f64] {
        &self.samples[self.sim.link_index[&(tx, rx)]]
    }

    /// Per-draw jammer power arriving at `rx`.
    fn jamming(&self, rx: usize) -> Vec<f64> {
        let mut total = vec![0.0; self.sim.draws];
        for &j in &self.sim.jammers {
            if j == rx {
                continue;
            }
            let p = self.sim.power_w[j];
            for (acc, g) in total.iter_mut().zip(self.get(j, rx)) {
                *acc += p * g;
            }
        }
        total
    }
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let roster = Roster::new(cfg.nodes.clone())?;
        let nodes = roster.nodes();
        let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
        let power_w = nodes
            .iter()
            .map(|n| n.effective_tx_power_dbm().map_or(0.0, dbm_to_watts))
            .collect();
        let of = |role: Role| -> Vec<usize> {
            (0..nodes.len()).filter(|&i| nodes[i].role == role).collect()
        };
        let users = of(Role::User);
        let bss = of(Role::BaseStation);
        let user = users[0];
        let initial_bs = match &cfg.policies.initial_serving_bs {
            Some(id) => roster.index_of(id).expect("validated"),
            None => *bss.iter().min_by_key(|&&b| &ids[b]).expect("validated"),
        };
        let p = &cfg.policies;
        let relay = of(Role::UavRelay).first().copied().filter(|_| p.relay_enabled);
        let hotzone = of(Role::UavHotzone).first().copied().filter(|_| p.hotzone_enabled);
        let safezone = of(Role::UavSafezone).first().copied().filter(|_| p.safezone_enabled);
        let (aggressor, victims) = match &p.uplink {
            Some(up) => {
                let serving = roster.index_of(&up.serving_bs).expect("validated");
                let victims = bss.iter().copied().filter(|&b| b != serving).collect();
                (roster.index_of(&up.aggressor), victims)
            }
            None => (None, Vec::new()),
        };
        let mut sim = Self {
            cfg,
            ids,
            power_w,
            user,
            users,
            bss,
            initial_bs,
            eves: of(Role::Eavesdropper),
            jammers: of(Role::Jammer),
            sensors: of(Role::UavSensor),
            relay,
            hotzone,
            safezone,
            aggressor,
            victims,
            links: Vec::new(),
            link_index: HashMap::new(),
            draws: match cfg.fading {
                FadingMode::On => cfg.channel.fading_samples_per_step,
                FadingMode::Off => 1,
            },
            roster,
        };
        sim.links = sim.needed_links();
        sim.link_index = sim.links.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Ok(sim)
    }

    fn needed_links(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        let mut jam_rx = Vec::new();
        for &b in &self.bss {
            for &u in &self.users {
                set.insert((b, u));
            }
            for &e in &self.eves {
                set.insert((b, e));
            }
        }
        jam_rx.extend(&self.users);
        jam_rx.extend(&self.eves);
        if let Some(r) = self.relay {
            set.insert((self.initial_bs, r));
            set.insert((r, self.user));
            for &e in &self.eves {
                set.insert((r, e));
            }
            jam_rx.push(r);
        }
        if let Some(h) = self.hotzone {
            set.insert((h, self.user));
        }
        if let Some(s) = self.safezone {
            for &e in &self.eves {
                set.insert((s, e));
            }
        }
        if let Some(a) = self.aggressor {
            for &v in &self.victims {
                set.insert((a, v));
            }
        }
        if self.cfg.detection.localization_bounds.is_some() {
            jam_rx.extend(&self.sensors);
        }
        for &j in &self.jammers {
            for &rx in &jam_rx {
                if rx != j {
                    set.insert((j, rx));
                }
            }
        }
        set.into_iter().collect()
    }

    fn sample(&self, positions: &[Position3D], step: usize) -> StepGains<'_> {
        let params = &self.cfg.channel;
        let nodes = self.roster.nodes();
        let step_key = if params.resample_each_step { step as u64 } else { 0 };
        let samples = self
            .links
            .par_iter()
            .map(|&(tx, rx)| {
                let key = format!("{}->{}", self.ids[tx], self.ids[rx]);
                let mut rng = substream(self.cfg.master_seed, &key, step_key);
                let class = LinkClass::from_endpoints(
                    params.is_aerial(nodes[tx].role, &positions[tx]),
                    params.is_aerial(nodes[rx].role, &positions[rx]),
                );
                sample_link_gains(
                    &positions[tx],
                    &positions[rx],
                    class,
                    params,
                    self.cfg.fading,
                    &mut rng,
                    self.draws,
                )
            })
            .collect();
        StepGains { sim: self, samples }
    }

    fn average(&self, tx_power_w: f64, gains: &[f64], interference: &[f64]) -> Averaged {
        let noise = self.cfg.noise.noise_power_w;
        let bw = self.cfg.bandwidth_hz;
        let mut sinr_sum = 0.0;
        let mut rate_sum = 0.0;
        for (g, i) in gains.iter().zip(interference) {
            let s = tx_power_w * g / (noise + i);
            sinr_sum += s;
            rate_sum += shannon_rate(s, bw);
        }
        let n = gains.len() as f64;
        Averaged {
            mean_sinr: sinr_sum / n,
            rate_bps: rate_sum / n,
        }
    }

    fn run(&self) -> Result<RunOutput> {
        let cfg = self.cfg;
        let steps = cfg.step_count();
        let mut records = Vec::with_capacity(steps);
        let mut serving: Option<ServingDecision> = None;
        let mut history: BTreeMap<usize, Vec<f64>> =
            self.users.iter().map(|&u| (u, Vec::new())).collect();
        let mut localization = None;
        let mut aggressor_latched = false;
        let mut mitigation = MitigationOutcome::Unchanged;

        for step in 0..steps {
            // rounded so that printed times stay short
            let t = (step as f64 * cfg.timestep_s * 1e9).round() / 1e9;
            let pos = self.roster.positions_at(t)?;
            let gains = self.sample(&pos, step);
            let mut links = Vec::new();
            let mut link_metric = |tx: usize, rx: usize, avg: &Averaged| -> Result<f64> {
                let label = format!("{}->{}", self.ids[tx], self.ids[rx]);
                let sinr = check(avg.mean_sinr, step, &label, "mean SINR")?;
                let rate = check(avg.rate_bps, step, &label, "rate")?;
                links.push(LinkMetric {
                    tx: self.ids[tx].clone(),
                    rx: self.ids[rx].clone(),
                    mean_sinr_db: linear_to_db(sinr),
                    rate_bps: rate,
                });
                Ok(rate)
            };

            // safe zone: artificial noise on covered eavesdroppers
            let eve_positions: Vec<Position3D> = self.eves.iter().map(|&e| pos[e]).collect();
            let covered = match self.safezone {
                Some(s) => safezone_coverage(
                    &cfg.policies.safezone,
                    &SafeZoneGeometry {
                        an_position: pos[s],
                        user_position: pos[self.user],
                        eve_positions: &eve_positions,
                    },
                ),
                None => vec![false; self.eves.len()],
            };
            let an_w = dbm_to_watts(cfg.policies.safezone.an_power_dbm);
            let eve_interference: Vec<Vec<f64>> = self
                .eves
                .iter()
                .zip(&covered)
                .map(|(&e, &c)| {
                    let mut i = gains.jamming(e);
                    if let (true, Some(s)) = (c, self.safezone) {
                        for (acc, g) in i.iter_mut().zip(gains.get(s, e)) {
                            *acc += an_w * g;
                        }
                    }
                    i
                })
                .collect();
            let user_interference = gains.jamming(self.user);

            let eve_rates = |tx: usize, links: &mut dyn FnMut(usize, usize, &Averaged) -> Result<f64>| -> Result<Vec<f64>> {
                self.eves
                    .iter()
                    .zip(&eve_interference)
                    .map(|(&e, i)| links(tx, e, &self.average(self.power_w[tx], gains.get(tx, e), i)))
                    .collect()
            };

            // every base station's secrecy towards the user
            let mut per_bs = Vec::with_capacity(self.bss.len());
            for &b in &self.bss {
                let legit = self.average(self.power_w[b], gains.get(b, self.user), &user_interference);
                let legit = link_metric(b, self.user, &legit)?;
                let eves = eve_rates(b, &mut link_metric)?;
                per_bs.push((b, secrecy_rate(legit, &eves), eves));
            }
            let direct = per_bs.iter().find(|c| c.0 == self.initial_bs).expect("initial bs");
            let secrecy_direct = direct.1;

            // selection: relay and secrecy handover
            let relay = match self.relay {
                None => None,
                Some(r) => {
                    let b = self.initial_bs;
                    let hop1 = self.average(self.power_w[b], gains.get(b, r), &gains.jamming(r));
                    let hop1 = link_metric(b, r, &hop1)?;
                    let hop2 = self.average(self.power_w[r], gains.get(r, self.user), &user_interference);
                    let hop2 = link_metric(r, self.user, &hop2)?;
                    let relay_eves = eve_rates(r, &mut link_metric)?;
                    let eves: Vec<f64> = match cfg.policies.eve_exposure {
                        EveExposure::BothHops => {
                            relay_eves.iter().zip(&direct.2).map(|(a, b)| a.max(*b)).collect()
                        }
                        EveExposure::RelayHopOnly => relay_eves,
                    };
                    let duty = if cfg.policies.relay_half_duplex { 0.5 } else { 1.0 };
                    let eves: Vec<f64> = eves.iter().map(|e| e * duty).collect();
                    let relayed = secrecy_rate(duty * relay_path_rate(hop1, hop2), &eves);
                    Some(evaluate_relay_option(secrecy_direct, relayed, cfg.policies.relay_mode).0)
                }
            };
            let handover = if cfg.policies.handover_enabled {
                let candidates: Vec<(String, SecrecyResult)> =
                    per_bs.iter().map(|c| (self.ids[c.0].clone(), c.1)).collect();
                let decision =
                    select_serving_bs(&candidates, serving.as_ref(), cfg.policies.hysteresis_bps)?;
                let chosen = candidates
                    .iter()
                    .find(|c| c.0 == decision.serving_bs)
                    .expect("selected among candidates")
                    .1;
                serving = Some(decision);
                Some(chosen)
            } else {
                None
            };
            let serving_idx = match &serving {
                Some(d) => self.roster.index_of(&d.serving_bs).expect("known bs"),
                None => self.initial_bs,
            };

            // hot zone: base station and UAV branches combined at the user
            let rate_hotzone_bps = match self.hotzone {
                None => None,
                Some(h) => {
                    let b = serving_idx;
                    let noise = cfg.noise.noise_power_w;
                    let hz = self.average(self.power_w[h], gains.get(h, self.user), &user_interference);
                    link_metric(h, self.user, &hz)?;
                    let rate = gains
                        .get(b, self.user)
                        .iter()
                        .zip(gains.get(h, self.user))
                        .zip(&user_interference)
                        .map(|((gb, gh), j)| {
                            let s = hotzone_sinr(
                                self.power_w[b] * gb,
                                self.power_w[h] * gh,
                                *j,
                                noise,
                                cfg.policies.egc_fallback,
                            );
                            shannon_rate(s, cfg.bandwidth_hz)
                        })
                        .sum::<f64>()
                        / self.draws as f64;
                    let label = format!("{}+{}->{}", self.ids[b], self.ids[h], self.ids[self.user]);
                    Some(check(rate, step, &label, "hot-zone rate")?)
                }
            };

            // uplink mitigation
            let mut uplink_interference_w = BTreeMap::new();
            let mut uplink_unmitigated_w = BTreeMap::new();
            if let (Some(a), Some(up)) = (self.aggressor, &cfg.policies.uplink) {
                let power_dbm = watts_to_dbm(self.power_w[a]);
                let nominal: Vec<f64> = self
                    .victims
                    .iter()
                    .map(|&v| power_dbm + linear_to_db(mean(gains.get(a, v))))
                    .collect();
                if !aggressor_latched {
                    let blocks: Vec<BlockReport> = self
                        .victims
                        .iter()
                        .zip(&nominal)
                        .map(|(&v, &level)| {
                            let bg = up.background_interference_dbm;
                            let hot = watts_to_dbm(dbm_to_watts(bg) + dbm_to_watts(level));
                            BlockReport {
                                bs_id: self.ids[v].clone(),
                                interference_dbm: (0..up.total_blocks)
                                    .map(|k| if up.aggressor_blocks.contains(&k) { hot } else { bg })
                                    .collect(),
                            }
                        })
                        .collect();
                    let allocations =
                        BTreeMap::from([(self.ids[a].clone(), up.aggressor_blocks.clone())]);
                    aggressor_latched = !self.victims.is_empty()
                        && identify_uplink_aggressor(&blocks, &allocations)?.is_some();
                }
                if aggressor_latched {
                    let sticky = matches!(up.mitigation, MitigationKind::Deny | MitigationKind::DedicatedResources);
                    if !(sticky && mitigation.is_active()) {
                        let reports: Vec<VictimReport> = self
                            .victims
                            .iter()
                            .zip(&nominal)
                            .map(|(&v, &level)| VictimReport {
                                bs_id: self.ids[v].clone(),
                                interference_dbm: level,
                            })
                            .collect();
                        mitigation =
                            mitigate_uplink(&reports, &self.ids[a], self.roster.nodes(), up)?;
                    }
                }
                for (&v, &level) in self.victims.iter().zip(&nominal) {
                    let residual = dbm_to_watts(mitigation.residual_interference_dbm(level));
                    let label = format!("{}->{}", self.ids[a], self.ids[v]);
                    uplink_interference_w
                        .insert(self.ids[v].clone(), check(residual, step, &label, "uplink interference")?);
                    uplink_unmitigated_w.insert(self.ids[v].clone(), dbm_to_watts(level));
                }
            }

            // detection on the fading-averaged SINR of every user
            let mut detection_metric_db = BTreeMap::new();
            let mut detect_flags = Vec::new();
            if cfg.detection.enabled {
                let det = &cfg.detection;
                let noise = cfg.noise.noise_power_w;
                let mut windows = Vec::with_capacity(self.users.len());
                for &u in &self.users {
                    let interference =
                        if u == self.user { user_interference.clone() } else { gains.jamming(u) };
                    let avg = self.average(self.power_w[serving_idx], gains.get(serving_idx, u), &interference);
                    let measured = linear_to_db(avg.mean_sinr);
                    let value = match det.metric {
                        DetectionMetric::Absolute => measured,
                        DetectionMetric::RelativeToBaseline => {
                            let class = LinkClass::from_endpoints(
                                false,
                                cfg.channel.is_aerial(Role::User, &pos[u]),
                            );
                            let loss = mean_path_loss_db(&pos[serving_idx], &pos[u], class, &cfg.channel);
                            let predicted = watts_to_dbm(self.power_w[serving_idx]) - loss
                                - watts_to_dbm(noise);
                            measured - predicted
                        }
                    };
                    let label = format!("{}->{}", self.ids[serving_idx], self.ids[u]);
                    let value = check(value, step, &label, "detection metric")?;
                    detection_metric_db.insert(self.ids[u].clone(), value);
                    let h = history.get_mut(&u).expect("user history");
                    h.push(value);
                    let tail = h[h.len().saturating_sub(det.window_len)..].to_vec();
                    windows.push(MetricWindow::new(self.ids[u].clone(), tail, det.window_len));
                }
                let report = match det.method {
                    DetectionMethod::Centralized => detect_centralized(&windows, det.threshold_db)?,
                    DetectionMethod::Distributed => detect_distributed(&windows, det.k_mad)?,
                };
                detect_flags = report.flagged;
                if let (Some(bounds), true, None) =
                    (&det.localization_bounds, !detect_flags.is_empty(), &localization)
                {
                    let measurements: Vec<RssMeasurement> = self
                        .sensors
                        .iter()
                        .map(|&s| {
                            let w: f64 = self
                                .jammers
                                .iter()
                                .map(|&j| self.power_w[j] * mean(gains.get(j, s)))
                                .sum();
                            RssMeasurement {
                                position: pos[s],
                                rss_dbm: watts_to_dbm(w),
                            }
                        })
                        .collect();
                    localization = Some(rss_localize(&measurements, &cfg.channel, bounds)?);
                }
            }

            records.push(StepRecord {
                step,
                t_s: t,
                user_id: self.ids[self.user].clone(),
                user_position: pos[self.user],
                positions: self.ids.iter().cloned().zip(pos.iter().copied()).collect(),
                serving_bs: self.ids[serving_idx].clone(),
                links,
                secrecy_direct,
                relay,
                rate_hotzone_bps,
                handover,
                detection_metric_db,
                detect_flags,
                mitigation_state: mitigation.label(),
                uplink_interference_w,
                uplink_unmitigated_w,
                covered_eavesdroppers: self
                    .eves
                    .iter()
                    .zip(&covered)
                    .filter(|(_, &c)| c)
                    .map(|(&e, _)| self.ids[e].clone())
                    .collect(),
            });
        }
        let summary = RunSummary::from_records(&records, cfg);
        Ok(RunOutput {
            records,
            summary,
            jammer_localization: localization,
        })
    }
}
