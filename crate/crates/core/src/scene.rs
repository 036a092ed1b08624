//! Geometry, node roster and mobility.
//!
//! Positions are in meters in a local Cartesian frame with `z` the height
//! above ground. Mobility is evaluated in closed form, so `position_at` is a
//! pure function of the roster and the time.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// A point in space. `z` is the height above ground and is never negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(SimError::domain(format!(
                "position {self} must be finite with z >= 0"
            )))
        }
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Azimuth of `other` seen from `self`, degrees in (-180, 180].
    /// Returns `None` when `other` is directly above or below.
    pub fn azimuth_to(&self, other: &Position3D) -> Option<f64> {
        if self.horizontal_distance(other) < 1e-9 {
            None
        } else {
            Some((other.y - self.y).atan2(other.x - self.x).to_degrees())
        }
    }

    /// Adds `offset`, clamping the height at ground level.
    pub fn offset_clamped(self, offset: Vec3) -> Position3D {
        let p = self + offset;
        Position3D { z: p.z.max(0.0), ..p }
    }
}

impl fmt::Display for Position3D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A displacement or velocity. Unlike [`Position3D`] its `z` may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add<Vec3> for Position3D {
    type Output = Position3D;

    fn add(self, v: Vec3) -> Position3D {
        Position3D::new(self.x + v.x, self.y + v.y, self.z + v.z)
    }
}

impl Sub for Position3D {
    type Output = Vec3;

    fn sub(self, rhs: Position3D) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: &Position3D, b: &Position3D) -> f64 {
    (*a - *b).norm()
}

/// Elevation of `aerial` as seen from `ground`, in degrees within (0, 90].
pub fn elevation_angle(ground: &Position3D, aerial: &Position3D) -> Result<f64> {
    let dz = aerial.z - ground.z;
    if !(dz > 0.0) {
        return Err(SimError::domain(format!(
            "aerial node {aerial} is not above ground node {ground}"
        )));
    }
    let h = ground.horizontal_distance(aerial);
    if h == 0.0 {
        return Ok(90.0);
    }
    Ok(dz.atan2(h).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    BaseStation,
    User,
    UavRelay,
    UavHotzone,
    UavSafezone,
    UavSensor,
    Eavesdropper,
    Jammer,
}

impl Role {
    pub fn is_uav(self) -> bool {
        matches!(
            self,
            Role::UavRelay | Role::UavHotzone | Role::UavSafezone | Role::UavSensor
        )
    }

    /// Roles that cannot be configured without a transmit power.
    pub fn requires_tx_power(self) -> bool {
        matches!(
            self,
            Role::BaseStation | Role::UavRelay | Role::UavHotzone | Role::UavSafezone | Role::Jammer
        )
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::BaseStation => "base_station",
            Role::User => "user",
            Role::UavRelay => "uav_relay",
            Role::UavHotzone => "uav_hotzone",
            Role::UavSafezone => "uav_safezone",
            Role::UavSensor => "uav_sensor",
            Role::Eavesdropper => "eavesdropper",
            Role::Jammer => "jammer",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilityPolicy {
    #[default]
    Static,
    Linear {
        /// m/s
        velocity: Vec3,
    },
    Follow {
        target: String,
        #[serde(default = "default_follow_offset")]
        offset: Vec3,
    },
}

fn default_follow_offset() -> Vec3 {
    Vec3::new(0.0, 0.0, 20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    pub initial_position: Position3D,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    /// Alternative to `tx_power_dbm`; folded into it when the scenario loads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbw: Option<f64>,
    #[serde(default)]
    pub mobility: MobilityPolicy,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, role: Role, initial_position: Position3D) -> Self {
        Self {
            id: id.into(),
            role,
            initial_position,
            tx_power_dbm: None,
            tx_power_dbw: None,
            mobility: MobilityPolicy::Static,
        }
    }

    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.tx_power_dbm = Some(dbm);
        self
    }

    pub fn with_mobility(mut self, mobility: MobilityPolicy) -> Self {
        self.mobility = mobility;
        self
    }

    /// Transmit power in dBm regardless of which unit the node was given in.
    pub fn effective_tx_power_dbm(&self) -> Option<f64> {
        self.tx_power_dbm.or(self.tx_power_dbw.map(|dbw| dbw + 30.0))
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(SimError::config("node id must not be empty"));
        }
        if !self.initial_position.is_valid() {
            return Err(SimError::config(format!(
                "node '{}': initial_position {} must be finite with z >= 0",
                self.id, self.initial_position
            )));
        }
        if self.tx_power_dbm.is_some() && self.tx_power_dbw.is_some() {
            return Err(SimError::config(format!(
                "node '{}': give either tx_power_dbm or tx_power_dbw, not both",
                self.id
            )));
        }
        match (self.role, self.effective_tx_power_dbm()) {
            (Role::Eavesdropper, Some(_)) => {
                return Err(SimError::config(format!(
                    "node '{}': eavesdroppers carry no tx power",
                    self.id
                )))
            }
            (role, None) if role.requires_tx_power() => {
                return Err(SimError::config(format!(
                    "node '{}': role {role} requires a tx power",
                    self.id
                )))
            }
            (_, Some(p)) if !p.is_finite() => {
                return Err(SimError::config(format!(
                    "node '{}': tx power must be finite",
                    self.id
                )))
            }
            _ => {}
        }
        match &self.mobility {
            MobilityPolicy::Linear { velocity } if !velocity.is_finite() => Err(SimError::config(
                format!("node '{}': velocity must be finite", self.id),
            )),
            MobilityPolicy::Follow { target, offset } => {
                if !offset.is_finite() {
                    Err(SimError::config(format!(
                        "node '{}': follow offset must be finite",
                        self.id
                    )))
                } else if target == &self.id {
                    Err(SimError::config(format!(
                        "node '{}': follow cycle (node follows itself)",
                        self.id
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Position of `node` at time `t` (seconds).
///
/// Follow chains are resolved against `roster`; a missing target or a cycle
/// is reported as a configuration error.
pub fn position_at(node: &NodeSpec, roster: &[NodeSpec], t: f64) -> Result<Position3D> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(SimError::domain(format!("time {t} must be finite and >= 0")));
    }
    let mut offsets = Vec::new();
    let mut current = node;
    loop {
        match &current.mobility {
            MobilityPolicy::Static => {
                return Ok(apply_offsets(current.initial_position, &offsets));
            }
            MobilityPolicy::Linear { velocity } => {
                let p = current.initial_position + velocity.scale(t);
                return Ok(apply_offsets(
                    Position3D { z: p.z.max(0.0), ..p },
                    &offsets,
                ));
            }
            MobilityPolicy::Follow { target, offset } => {
                if offsets.len() > roster.len() {
                    return Err(SimError::config(format!(
                        "follow cycle involving node '{}'",
                        node.id
                    )));
                }
                offsets.push(*offset);
                current = roster.iter().find(|n| &n.id == target).ok_or_else(|| {
                    SimError::config(format!(
                        "node '{}' follows unknown node '{target}'",
                        current.id
                    ))
                })?;
            }
        }
    }
}

fn apply_offsets(base: Position3D, offsets: &[Vec3]) -> Position3D {
    // innermost follower's offset is applied last
    offsets
        .iter()
        .rev()
        .fold(base, |p, off| p.offset_clamped(*off))
}

/// Validated set of nodes with id lookup.
#[derive(Debug, Clone)]
pub struct Roster {
    nodes: Vec<NodeSpec>,
    index: HashMap<String, usize>,
}

impl Roster {
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            n.validate()?;
            if index.insert(n.id.clone(), i).is_some() {
                return Err(SimError::config(format!("duplicate node id '{}'", n.id)));
            }
        }
        let roster = Self { nodes, index };
        roster.check_follow_chains()?;
        Ok(roster)
    }

    fn check_follow_chains(&self) -> Result<()> {
        for start in &self.nodes {
            let mut seen = vec![false; self.nodes.len()];
            let mut current = start;
            while let MobilityPolicy::Follow { target, .. } = &current.mobility {
                let Some(&next) = self.index.get(target) else {
                    return Err(SimError::config(format!(
                        "node '{}' follows unknown node '{target}'",
                        current.id
                    )));
                };
                if seen[next] {
                    return Err(SimError::config(format!(
                        "follow cycle involving node '{}'",
                        start.id
                    )));
                }
                seen[next] = true;
                current = &self.nodes[next];
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn get(&self, id: &str) -> Option<&NodeSpec> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &NodeSpec> + '_ {
        self.nodes.iter().filter(move |n| n.role == role)
    }

    /// Positions of every node at `t`, in roster order.
    pub fn positions_at(&self, t: f64) -> Result<Vec<Position3D>> {
        self.nodes
            .iter()
            .map(|n| position_at(n, &self.nodes, t))
            .collect()
    }
}
