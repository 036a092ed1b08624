//! Jamming detection, RSS jammer localization and uplink aggressor
//! identification.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mean_path_loss_db, ChannelParams, LinkClass};
use crate::error::{Result, SimError};
use crate::scene::{Position3D, Role};

/// Recent per-step SINR values (dB) of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricWindow {
    pub node_id: String,
    pub samples: Vec<f64>,
    pub window_len: usize,
}

impl MetricWindow {
    pub fn new(node_id: impl Into<String>, samples: Vec<f64>, window_len: usize) -> Self {
        Self {
            node_id: node_id.into(),
            samples,
            window_len,
        }
    }

    /// Mean over the last `window_len` samples (all of them if fewer).
    pub fn mean(&self) -> Result<f64> {
        if self.samples.is_empty() || self.window_len == 0 {
            return Err(SimError::domain(format!(
                "metric window of '{}' is empty",
                self.node_id
            )));
        }
        let start = self.samples.len().saturating_sub(self.window_len);
        let tail = &self.samples[start..];
        if tail.iter().any(|s| !s.is_finite()) {
            return Err(SimError::domain(format!(
                "metric window of '{}' holds non-finite samples",
                self.node_id
            )));
        }
        Ok(tail.iter().sum::<f64>() / tail.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    #[default]
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Sorted by node id.
    pub flagged: Vec<String>,
    pub method: DetectionMethod,
    /// Windowed mean (centralized, dB) or peer deficit (distributed, MAD
    /// units, or dB when the MAD is zero).
    pub statistics: BTreeMap<String, f64>,
    pub threshold: f64,
}

/// Flags every node whose windowed mean SINR is strictly below `threshold_db`.
pub fn detect_centralized(windows: &[MetricWindow], threshold_db: f64) -> Result<DetectionReport> {
    let mut statistics = BTreeMap::new();
    for w in windows {
        statistics.insert(w.node_id.clone(), w.mean()?);
    }
    let flagged = statistics
        .iter()
        .filter(|(_, m)| **m < threshold_db)
        .map(|(id, _)| id.clone())
        .collect();
    Ok(DetectionReport {
        flagged,
        method: DetectionMethod::Centralized,
        statistics,
        threshold: threshold_db,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Peer comparison: a node is flagged when the median of its peers exceeds
/// its own windowed mean by more than `k_mad` median absolute deviations.
pub fn detect_distributed(windows: &[MetricWindow], k_mad: f64) -> Result<DetectionReport> {
    if windows.len() < 3 {
        return Err(SimError::domain(format!(
            "distributed detection needs at least 3 nodes (got {})",
            windows.len()
        )));
    }
    let means = windows
        .iter()
        .map(|w| w.mean())
        .collect::<Result<Vec<_>>>()?;
    let center = median(&mut means.clone());
    let mut deviations: Vec<f64> = means.iter().map(|m| (m - center).abs()).collect();
    let mad = median(&mut deviations);
    let threshold = if mad > 0.0 { k_mad * mad } else { 1e-9 };

    let mut statistics = BTreeMap::new();
    let mut flagged = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        let mut peers: Vec<f64> = means
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, m)| *m)
            .collect();
        let deficit = median(&mut peers) - means[i];
        if deficit > threshold {
            flagged.push(w.node_id.clone());
        }
        statistics.insert(
            w.node_id.clone(),
            if mad > 0.0 { deficit / mad } else { deficit },
        );
    }
    flagged.sort();
    Ok(DetectionReport {
        flagged,
        method: DetectionMethod::Distributed,
        statistics,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssMeasurement {
    pub position: Position3D,
    pub rss_dbm: f64,
}

/// Axis-aligned search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBounds {
    pub min: Position3D,
    pub max: Position3D,
}

impl SearchBounds {
    pub fn new(min: Position3D, max: Position3D) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        self.min.validate()?;
        self.max.validate()?;
        if self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z {
            return Err(SimError::domain(format!(
                "search bounds {} .. {} are inverted",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn lo(&self) -> [f64; 3] {
        [self.min.x, self.min.y, self.min.z]
    }

    fn hi(&self) -> [f64; 3] {
        [self.max.x, self.max.y, self.max.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizerOptions {
    pub cells_per_axis: usize,
    /// Best coarse cells refined independently.
    pub starts: usize,
    /// Pattern search stops once every step is below this, meters.
    pub tolerance_m: f64,
}

impl Default for LocalizerOptions {
    fn default() -> Self {
        Self {
            cells_per_axis: 64,
            starts: 8,
            tolerance_m: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEstimate {
    pub position: Position3D,
    pub est_tx_power_dbm: f64,
    /// Sum of squared RSS residuals, dB².
    pub residual: f64,
    /// Best residual of the coarse grid before refinement.
    pub coarse_residual: f64,
    /// The optimum sits on a face of the search box.
    pub bounds_limited: bool,
}

/// Mean path loss from a ground transmitter at `source` to `sensor`. This
/// is the forward model of the localizer; sensors at or above the aerial
/// height threshold see an air-to-ground channel.
pub fn rss_model_path_loss_db(source: &Position3D, sensor: &Position3D, params: &ChannelParams) -> f64 {
    let class = LinkClass::from_endpoints(false, params.is_aerial(Role::UavSensor, sensor));
    mean_path_loss_db(source, sensor, class, params)
}

/// Residual at a candidate position with the transmit power solved in
/// closed form (mean of rss + loss). Returns `(residual, power_dbm)`.
pub fn localization_residual(
    candidate: &Position3D,
    measurements: &[RssMeasurement],
    params: &ChannelParams,
) -> (f64, f64) {
    let implied: Vec<f64> = measurements
        .iter()
        .map(|m| m.rss_dbm + rss_model_path_loss_db(candidate, &m.position, params))
        .collect();
    let power = implied.iter().sum::<f64>() / implied.len() as f64;
    let residual = implied.iter().map(|p| (p - power).powi(2)).sum();
    (residual, power)
}

fn check_geometry(measurements: &[RssMeasurement]) -> Result<()> {
    if measurements.len() < 4 {
        return Err(SimError::domain(format!(
            "localization needs at least 4 measurements (got {})",
            measurements.len()
        )));
    }
    if measurements
        .iter()
        .any(|m| !m.rss_dbm.is_finite() || !m.position.is_valid())
    {
        return Err(SimError::domain("measurements must be finite"));
    }
    let p0 = measurements[0].position;
    let dir = measurements
        .iter()
        .map(|m| m.position - p0)
        .find(|d| d.norm() > 1e-9);
    let collinear = match dir {
        None => true,
        Some(d) => measurements.iter().all(|m| {
            let v = m.position - p0;
            let cx = d.y * v.z - d.z * v.y;
            let cy = d.z * v.x - d.x * v.z;
            let cz = d.x * v.y - d.y * v.x;
            (cx * cx + cy * cy + cz * cz).sqrt() <= 1e-9 * d.norm() * v.norm().max(1.0)
        }),
    };
    if collinear {
        return Err(SimError::domain("sensor positions are collinear"));
    }
    Ok(())
}

pub fn rss_localize(
    measurements: &[RssMeasurement],
    params: &ChannelParams,
    bounds: &SearchBounds,
) -> Result<LocalizationEstimate> {
    rss_localize_with(measurements, params, bounds, &LocalizerOptions::default())
}

/// Coarse grid search over cell centers, then local refinement from the
/// best few cells: an axis-wise pattern search followed by a
/// Levenberg-Marquardt polish. Equal residuals resolve to the lowest cell
/// index.
pub fn rss_localize_with(
    measurements: &[RssMeasurement],
    params: &ChannelParams,
    bounds: &SearchBounds,
    options: &LocalizerOptions,
) -> Result<LocalizationEstimate> {
    check_geometry(measurements)?;
    bounds.validate()?;
    if options.cells_per_axis == 0 || !(options.tolerance_m > 0.0) || options.starts == 0 {
        return Err(SimError::domain(
            "localizer needs >= 1 cell, >= 1 start and a positive tolerance",
        ));
    }
    let n = options.cells_per_axis;
    let lo = bounds.lo();
    let hi = bounds.hi();
    let width: [f64; 3] = std::array::from_fn(|a| (hi[a] - lo[a]) / n as f64);
    let center = |i: usize, a: usize| lo[a] + (i as f64 + 0.5) * width[a];
    let at = |idx: usize| {
        let (ix, iy, iz) = (idx / (n * n), (idx / n) % n, idx % n);
        Position3D::new(center(ix, 0), center(iy, 1), center(iz, 2))
    };

    let mut coarse: Vec<(f64, usize)> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| (localization_residual(&at(idx), measurements, params).0, idx))
        .collect();
    let by_residual = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = options.starts.min(coarse.len());
    if k < coarse.len() {
        coarse.select_nth_unstable_by(k - 1, by_residual);
        coarse.truncate(k);
    }
    coarse.sort_by(by_residual);
    let coarse_residual = coarse[0].0;

    let refine = |start: Position3D| {
        let p = pattern_search(start, measurements, params, lo, hi, width, options.tolerance_m);
        levenberg_marquardt(p, measurements, params, lo, hi)
    };
    let (residual, p) = coarse
        .iter()
        .map(|&(_, idx)| {
            let p = refine(at(idx));
            (localization_residual(&p, measurements, params).0, p)
        })
        .reduce(|best, c| if c.0 < best.0 { c } else { best })
        .expect("at least one start");

    let (_, power) = localization_residual(&p, measurements, params);
    let c = [p.x, p.y, p.z];
    let tol = options.tolerance_m;
    let bounds_limited =
        (0..3).any(|a| hi[a] > lo[a] && (c[a] - lo[a] <= tol || hi[a] - c[a] <= tol));
    Ok(LocalizationEstimate {
        position: p,
        est_tx_power_dbm: power,
        residual,
        coarse_residual,
        bounds_limited,
    })
}

fn clamp_to(c: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Position3D {
    Position3D::new(c[0].clamp(lo[0], hi[0]), c[1].clamp(lo[1], hi[1]), c[2].clamp(lo[2], hi[2]))
}

/// Compass search along the axes, halving a step whenever neither
/// direction improves.
fn pattern_search(
    start: Position3D,
    measurements: &[RssMeasurement],
    params: &ChannelParams,
    lo: [f64; 3],
    hi: [f64; 3],
    initial_step: [f64; 3],
    tol: f64,
) -> Position3D {
    let mut p = start;
    let mut residual = localization_residual(&p, measurements, params).0;
    let mut step = initial_step;
    let mut iterations = 0;
    while step.iter().any(|s| *s >= tol) && iterations < 100_000 {
        iterations += 1;
        for axis in 0..3 {
            if step[axis] < tol {
                continue;
            }
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut c = [p.x, p.y, p.z];
                c[axis] += sign * step[axis];
                let q = clamp_to(c, lo, hi);
                if q == p {
                    continue;
                }
                let r = localization_residual(&q, measurements, params).0;
                if r < residual {
                    p = q;
                    residual = r;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step[axis] *= 0.5;
            }
        }
    }
    p
}

/// Residuals of each implied transmit power from their mean.
fn implied_deviation(p: [f64; 3], measurements: &[RssMeasurement], params: &ChannelParams) -> Vec<f64> {
    let candidate = Position3D::new(p[0], p[1], p[2]);
    let implied: Vec<f64> = measurements
        .iter()
        .map(|m| m.rss_dbm + rss_model_path_loss_db(&candidate, &m.position, params))
        .collect();
    let mean = implied.iter().sum::<f64>() / implied.len() as f64;
    implied.into_iter().map(|v| v - mean).collect()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xi) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xi = det(m) / d;
    }
    Some(x)
}

/// Damped Gauss-Newton on the deviation vector with central-difference
/// Jacobians, projected onto the search box.
fn levenberg_marquardt(
    start: Position3D,
    measurements: &[RssMeasurement],
    params: &ChannelParams,
    lo: [f64; 3],
    hi: [f64; 3],
) -> Position3D {
    const H: f64 = 1e-3;
    let cost = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>();
    let mut p = [start.x, start.y, start.z];
    let mut f = implied_deviation(p, measurements, params);
    let mut c = cost(&f);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jac = vec![[0.0; 3]; f.len()];
        for axis in 0..3 {
            let mut up = p;
            let mut down = p;
            up[axis] += H;
            down[axis] -= H;
            let fu = implied_deviation(up, measurements, params);
            let fd = implied_deviation(down, measurements, params);
            for (row, (u, d)) in jac.iter_mut().zip(fu.iter().zip(&fd)) {
                row[axis] = (u - d) / (2.0 * H);
            }
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtf = [0.0; 3];
        for (row, fi) in jac.iter().zip(&f) {
            for i in 0..3 {
                jtf[i] += row[i] * fi;
                for j in 0..3 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for (i, r) in a.iter_mut().enumerate() {
                r[i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(delta) = solve3(a, jtf.map(|v| -v)) else {
                lambda *= 10.0;
                continue;
            };
            let q = clamp_to([p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]], lo, hi);
            let q = [q.x, q.y, q.z];
            let fq = implied_deviation(q, measurements, params);
            let cq = cost(&fq);
            if cq < c {
                let moved = (0..3).map(|a| (q[a] - p[a]).abs()).fold(0.0, f64::max);
                p = q;
                f = fq;
                c = cq;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if moved < 1e-7 {
                    return Position3D::new(p[0], p[1], p[2]);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Position3D::new(p[0], p[1], p[2])
}

#[derive(Debug, Deserialize)]
struct MeasurementRow {
    x: f64,
    y: f64,
    z: f64,
    rss_dbm: f64,
}

/// Reads `x,y,z,rss_dbm` rows (with header).
pub fn read_measurements_csv(path: &Path) -> Result<Vec<RssMeasurement>> {
    let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    reader
        .deserialize::<MeasurementRow>()
        .map(|row| {
            let row = row.map_err(|e| SimError::config(format!("{}: {e}", path.display())))?;
            Ok(RssMeasurement {
                position: Position3D::new(row.x, row.y, row.z),
                rss_dbm: row.rss_dbm,
            })
        })
        .collect()
}

/// Per-resource-block interference seen by one victim base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub bs_id: String,
    pub interference_dbm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggressorIdentification {
    pub uav_id: String,
    /// Mean allocated-minus-unallocated contrast, dB.
    pub confidence_db: f64,
}

/// Minimum contrast, dB, before an aggressor is named.
pub const AGGRESSOR_CONTRAST_FLOOR_DB: f64 = 3.0;

/// Names the UAV whose allocated blocks run hottest relative to the rest
/// at the victims, if that contrast exceeds the floor.
pub fn identify_uplink_aggressor(
    victim_reports: &[BlockReport],
    allocations: &BTreeMap<String, Vec<usize>>,
) -> Result<Option<AggressorIdentification>> {
    if allocations.is_empty() {
        return Err(SimError::domain("no UAV resource allocations given"));
    }
    if victim_reports.is_empty() {
        return Err(SimError::domain("no victim reports given"));
    }
    let mut best: Option<AggressorIdentification> = None;
    for (uav, blocks) in allocations {
        let mut total = 0.0;
        let mut counted = 0usize;
        for report in victim_reports {
            let levels = &report.interference_dbm;
            let mut inside = (0.0, 0usize);
            let mut outside = (0.0, 0usize);
            for (b, level) in levels.iter().enumerate() {
                if blocks.contains(&b) {
                    inside = (inside.0 + level, inside.1 + 1);
                } else {
                    outside = (outside.0 + level, outside.1 + 1);
                }
            }
            if inside.1 > 0 && outside.1 > 0 {
                total += inside.0 / inside.1 as f64 - outside.0 / outside.1 as f64;
                counted += 1;
            }
        }
        if counted == 0 {
            continue;
        }
        let contrast = total / counted as f64;
        if best.as_ref().is_none_or(|b| contrast > b.confidence_db) {
            best = Some(AggressorIdentification {
                uav_id: uav.clone(),
                confidence_db: contrast,
            });
        }
    }
    Ok(best.filter(|b| b.confidence_db > AGGRESSOR_CONTRAST_FLOOR_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fspl_db;
    use proptest::prelude::*;

    fn win(id: &str, mean: f64) -> MetricWindow {
        MetricWindow::new(id, vec![mean; 10], 10)
    }

    #[test]
    fn centralized_rules() {
        let r = detect_centralized(&[win("a", -10.0), win("b", 0.0)], -5.0).unwrap();
        assert_eq!(r.flagged, vec!["a"]);
        let r = detect_centralized(&[win("a", 1.0), win("b", 0.0)], -5.0).unwrap();
        assert!(r.flagged.is_empty());
        let r = detect_centralized(&[win("a", -5.0)], -5.0).unwrap();
        assert!(r.flagged.is_empty());
        assert!(detect_centralized(&[MetricWindow::new("a", vec![], 10)], 0.0).is_err());
    }

    #[test]
    fn window_uses_tail() {
        let w = MetricWindow::new("a", vec![100.0, 1.0, 3.0], 2);
        assert_eq!(w.mean().unwrap(), 2.0);
    }

    #[test]
    fn distributed_rules() {
        let same: Vec<_> = (0..5).map(|i| win(&format!("n{i}"), 7.0)).collect();
        assert!(detect_distributed(&same, 3.0).unwrap().flagged.is_empty());

        let mut ws: Vec<_> = (0..9)
            .map(|i| win(&format!("n{i}"), 10.0 + 0.1 * i as f64))
            .collect();
        ws.push(win("victim", -10.0));
        assert_eq!(detect_distributed(&ws, 3.0).unwrap().flagged, vec!["victim"]);

        let mut flat: Vec<_> = (0..4).map(|i| win(&format!("n{i}"), 5.0)).collect();
        flat.push(win("low", 4.0));
        assert_eq!(detect_distributed(&flat, 3.0).unwrap().flagged, vec!["low"]);

        assert!(detect_distributed(&ws[..2], 3.0).is_err());
    }

    /// Restates the peer rule from scratch.
    fn distributed_oracle(means: &[f64], k: f64) -> Vec<usize> {
        fn med(v: &[f64]) -> f64 {
            let mut s = v.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = s.len();
            if n % 2 == 1 {
                s[n / 2]
            } else {
                (s[n / 2 - 1] + s[n / 2]) / 2.0
            }
        }
        let c = med(means);
        let mad = med(&means.iter().map(|m| (m - c).abs()).collect::<Vec<_>>());
        (0..means.len())
            .filter(|&i| {
                let peers: Vec<f64> = means
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, m)| *m)
                    .collect();
                let gap = med(&peers) - means[i];
                if mad > 0.0 {
                    gap > k * mad
                } else {
                    gap > 1e-9
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn distributed_matches_oracle(means in prop::collection::vec(-30.0..30.0f64, 3..12), k in 0.5..4.0f64) {
            let ws: Vec<_> = means.iter().enumerate().map(|(i, m)| win(&format!("n{i:02}"), *m)).collect();
            let got = detect_distributed(&ws, k).unwrap().flagged;
            let want: Vec<String> = distributed_oracle(&means, k).into_iter().map(|i| format!("n{i:02}")).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn detectors_ignore_order(means in prop::collection::vec(-30.0..30.0f64, 3..10), rot in 0usize..10, thr in -20.0..20.0f64) {
            let ws: Vec<_> = means.iter().enumerate().map(|(i, m)| win(&format!("n{i}"), *m)).collect();
            let mut rotated = ws.clone();
            rotated.rotate_left(rot % ws.len());
            prop_assert_eq!(detect_distributed(&ws, 3.0).unwrap().flagged, detect_distributed(&rotated, 3.0).unwrap().flagged);
            prop_assert_eq!(detect_centralized(&ws, thr).unwrap().flagged, detect_centralized(&rotated, thr).unwrap().flagged);
        }
    }

    fn synth(source: Position3D, power_dbm: f64, sensors: &[Position3D]) -> Vec<RssMeasurement> {
        let params = ChannelParams::default();
        sensors
            .iter()
            .map(|s| RssMeasurement {
                position: *s,
                rss_dbm: power_dbm - rss_model_path_loss_db(&source, s, &params),
            })
            .collect()
    }

    #[test]
    fn forward_model_matches_free_space_for_ground_sensors() {
        let params = ChannelParams::default();
        let pl = rss_model_path_loss_db(
            &Position3D::new(0.0, 0.0, 0.0),
            &Position3D::new(1.0, 0.0, 0.0),
            &params,
        );
        assert!((pl - fspl_db(1.0, 2e9)).abs() < 1e-12);
    }

    #[test]
    fn localizes_the_jammer() {
        let sensors = [
            Position3D::new(200.0, -300.0, 60.0),
            Position3D::new(800.0, -250.0, 40.0),
            Position3D::new(750.0, 300.0, 80.0),
            Position3D::new(250.0, 280.0, 50.0),
            Position3D::new(500.0, 20.0, 100.0),
        ];
        let source = Position3D::new(500.0, 0.0, 0.0);
        let m = synth(source, 45.0, &sensors);
        let bounds = SearchBounds::new(
            Position3D::new(0.0, -500.0, 0.0),
            Position3D::new(1000.0, 500.0, 100.0),
        )
        .unwrap();
        let est = rss_localize(&m, &ChannelParams::default(), &bounds).unwrap();
        let err = crate::scene::distance(&est.position, &source);
        assert!(err < 0.5, "error {err} m at {}", est.position);
        assert!((est.est_tx_power_dbm - 45.0).abs() < 0.5);
        assert!(est.residual <= est.coarse_residual);
        // z = 0 is a face of the box
        assert!(est.bounds_limited);
    }

    #[test]
    fn localization_input_errors() {
        let sensors = [
            Position3D::new(0.0, 0.0, 50.0),
            Position3D::new(100.0, 0.0, 50.0),
            Position3D::new(200.0, 0.0, 50.0),
        ];
        let bounds = SearchBounds::new(Position3D::new(0.0, 0.0, 0.0), Position3D::new(10.0, 10.0, 10.0)).unwrap();
        let m = synth(Position3D::new(5.0, 5.0, 0.0), 30.0, &sensors);
        assert!(rss_localize(&m, &ChannelParams::default(), &bounds).is_err());
        let mut line = sensors.to_vec();
        line.push(Position3D::new(300.0, 0.0, 50.0));
        let m = synth(Position3D::new(5.0, 5.0, 0.0), 30.0, &line);
        assert!(rss_localize(&m, &ChannelParams::default(), &bounds).is_err());
    }

    fn blocks(hot: &[usize], hot_dbm: f64, n: usize) -> Vec<f64> {
        (0..n).map(|b| if hot.contains(&b) { hot_dbm } else { -110.0 }).collect()
    }

    #[test]
    fn aggressor_identification() {
        let reports: Vec<_> = (0..3)
            .map(|i| BlockReport {
                bs_id: format!("bs{i}"),
                interference_dbm: blocks(&[0, 1, 2], -90.0, 20),
            })
            .collect();
        let alloc = BTreeMap::from([("uav".to_string(), vec![0, 1, 2])]);
        let id = identify_uplink_aggressor(&reports, &alloc).unwrap().unwrap();
        assert_eq!(id.uav_id, "uav");
        assert!((id.confidence_db - 20.0).abs() < 1e-12);

        let flat = vec![BlockReport {
            bs_id: "bs0".into(),
            interference_dbm: vec![-100.0; 20],
        }];
        assert!(identify_uplink_aggressor(&flat, &alloc).unwrap().is_none());
        assert!(identify_uplink_aggressor(&flat, &BTreeMap::new()).is_err());

        let mut levels = blocks(&[0, 1], -100.0, 20);
        levels[5] = -105.0;
        levels[6] = -105.0;
        // contrasts: uav_a ~9.6 dB, uav_b ~3.9 dB
        let two = vec![BlockReport {
            bs_id: "bs0".into(),
            interference_dbm: levels,
        }];
        let alloc = BTreeMap::from([
            ("uav_a".to_string(), vec![0, 1]),
            ("uav_b".to_string(), vec![5, 6]),
        ]);
        let id = identify_uplink_aggressor(&two, &alloc).unwrap().unwrap();
        assert_eq!(id.uav_id, "uav_a");
    }

    proptest! {
        #[test]
        fn identified_aggressor_clears_floor(levels in prop::collection::vec(-120.0..-60.0f64, 10),
                                             alloc in prop::collection::btree_set(0usize..10, 1..5)) {
            let reports = vec![BlockReport { bs_id: "bs".into(), interference_dbm: levels }];
            let allocations = BTreeMap::from([("u".to_string(), alloc.into_iter().collect::<Vec<_>>())]);
            if let Some(id) = identify_uplink_aggressor(&reports, &allocations).unwrap() {
                prop_assert!(id.confidence_db > AGGRESSOR_CONTRAST_FLOOR_DB);
            }
        }
    }
}
