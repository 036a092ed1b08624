//! Fixtures shared by the simulator benchmarks.

use uavsec_core::channel::mean_path_loss_db;
use uavsec_core::detectloc::RssMeasurement;
use uavsec_core::{ChannelParams, FadingMode, LinkClass, Position3D, ScenarioConfig};

/// Bundled scenario shortened to `duration_s` with `draws` fading samples
/// per link and step.
pub fn shortened(name: &str, duration_s: f64, draws: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::bundled(name).expect("bundled scenario");
    cfg.duration_s = duration_s;
    cfg.channel.fading_samples_per_step = draws;
    cfg
}

/// Same scenario with fading replaced by its mean.
pub fn without_fading(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.fading = FadingMode::Off;
    cfg
}

/// Noiseless RSS from a ground source at `source` seen by sensors at 2 m
/// around a 1 km square, under the terrestrial log-distance model.
pub fn ground_measurements(source: Position3D, tx_dbm: f64) -> Vec<RssMeasurement> {
    let params = ChannelParams::default();
    let corners = [(-200.0, -200.0), (1200.0, -200.0), (-200.0, 1200.0), (1200.0, 1200.0), (500.0, 1300.0)];
    corners
        .iter()
        .map(|&(x, y)| {
            let position = Position3D::new(x, y, 2.0);
            let loss = mean_path_loss_db(&source, &position, LinkClass::GroundGround, &params);
            RssMeasurement {
                position,
                rss_dbm: tx_dbm - loss,
            }
        })
        .collect()
}
