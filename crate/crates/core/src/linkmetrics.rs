//! Power accounting and information metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Power level in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

impl PowerDbm {
    pub fn to_watts(self) -> f64 {
        dbm_to_watts(self.0)
    }

    pub fn from_watts(w: f64) -> Self {
        PowerDbm(watts_to_dbm(w))
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn watts_to_dbw(w: f64) -> f64 {
    10.0 * w.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Receiver noise, identical at every receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub noise_power_w: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            noise_power_w: 1e-12,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.noise_power_w.is_finite() && self.noise_power_w > 0.0 {
            Ok(())
        } else {
            Err(SimError::config(format!(
                "noise.noise_power_w must be positive (got {})",
                self.noise_power_w
            )))
        }
    }
}

/// Realized metrics of one transmitter→receiver pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub tx: String,
    pub rx: String,
    pub gain_linear: f64,
    pub rx_power_w: f64,
    pub interference_w: f64,
    pub sinr_linear: f64,
    pub rate_bps: f64,
}

impl LinkState {
    pub fn evaluate(
        tx: impl Into<String>,
        rx: impl Into<String>,
        tx_power_w: f64,
        gain_linear: f64,
        interference_w: f64,
        noise: &NoiseModel,
        bandwidth_hz: f64,
    ) -> Self {
        let rx_power_w = tx_power_w * gain_linear;
        let sinr_linear = sinr(rx_power_w, &[interference_w], noise);
        Self {
            tx: tx.into(),
            rx: rx.into(),
            gain_linear,
            rx_power_w,
            interference_w,
            sinr_linear,
            rate_bps: shannon_rate(sinr_linear, bandwidth_hz),
        }
    }

    /// Same link with `extra_w` more interference at the receiver.
    pub fn with_added_interference(&self, extra_w: f64, noise: &NoiseModel, bandwidth_hz: f64) -> Self {
        let interference_w = self.interference_w + extra_w;
        let sinr_linear = sinr(self.rx_power_w, &[interference_w], noise);
        Self {
            interference_w,
            sinr_linear,
            rate_bps: shannon_rate(sinr_linear, bandwidth_hz),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SecrecyResult {
    pub legit_rate_bps: f64,
    pub max_eve_rate_bps: f64,
    pub secrecy_rate_bps: f64,
}

pub fn sinr(desired_rx_power_w: f64, interferer_rx_powers_w: &[f64], noise: &NoiseModel) -> f64 {
    desired_rx_power_w / (noise.noise_power_w + interferer_rx_powers_w.iter().sum::<f64>())
}

/// Equal gain combining: co-phased branch amplitudes summed with unit
/// weights, so SINR = (Σ aᵢ)² / Σ (Nᵢ + Iᵢ).
pub fn egc_combine(
    branch_amplitudes: &[f64],
    branch_noise_w: &[f64],
    branch_interference_w: &[f64],
) -> Result<f64> {
    if branch_amplitudes.is_empty() {
        return Err(SimError::domain("equal gain combining needs at least one branch"));
    }
    if branch_noise_w.len() != branch_amplitudes.len()
        || branch_interference_w.len() != branch_amplitudes.len()
    {
        return Err(SimError::domain(format!(
            "branch lists differ in length ({}, {}, {})",
            branch_amplitudes.len(),
            branch_noise_w.len(),
            branch_interference_w.len()
        )));
    }
    if branch_amplitudes.iter().any(|a| *a < 0.0) {
        return Err(SimError::domain("branch amplitudes must be >= 0"));
    }
    let signal: f64 = branch_amplitudes.iter().sum();
    let impairment: f64 = branch_noise_w
        .iter()
        .zip(branch_interference_w)
        .map(|(n, i)| n + i)
        .sum();
    Ok(signal * signal / impairment)
}

/// Shannon capacity B·log2(1 + SINR).
pub fn shannon_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sinr.ln_1p() / std::f64::consts::LN_2
}

pub fn secrecy_rate(legit_rate_bps: f64, eve_rates_bps: &[f64]) -> SecrecyResult {
    let max_eve = eve_rates_bps.iter().copied().fold(0.0, f64::max);
    SecrecyResult {
        legit_rate_bps,
        max_eve_rate_bps: max_eve,
        secrecy_rate_bps: (legit_rate_bps - max_eve).max(0.0),
    }
}

/// End-to-end rate of a decode-and-forward relay path.
pub fn relay_path_rate(hop1_bps: f64, hop2_bps: f64) -> f64 {
    hop1_bps.min(hop2_bps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn power_conversions() {
        assert_eq!(dbw_to_watts(0.0), 1.0);
        assert!((dbm_to_watts(43.0) - 19.953).abs() < 1e-3);
        assert!((dbw_to_watts(15.0) - 31.623).abs() < 1e-3);
        assert!((PowerDbm(-90.0).to_watts() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn sinr_cases() {
        let n = NoiseModel::default();
        assert_relative_eq!(sinr(1e-9, &[], &n), 1000.0, max_relative = 1e-12);
        assert_eq!(sinr(0.0, &[1e-9], &n), 0.0);
        assert!(sinr(1e-9, &[1e-15], &n) < sinr(1e-9, &[], &n));
    }

    #[test]
    fn egc_cases() {
        let n = NoiseModel::default();
        let single = egc_combine(&[1e-9f64.sqrt()], &[1e-12], &[0.0]).unwrap();
        assert_relative_eq!(single, sinr(1e-9, &[], &n), max_relative = 1e-12);
        let a = 2e-10f64.sqrt();
        let two = egc_combine(&[a, a], &[1e-12, 1e-12], &[0.0, 0.0]).unwrap();
        let one = egc_combine(&[a], &[1e-12], &[0.0]).unwrap();
        assert_relative_eq!(two / one, 2.0, max_relative = 1e-12);
        assert_eq!(egc_combine(&[3.0, 4.0], &[1.0, 1.0], &[0.0, 0.0]).unwrap(), 24.5);
        assert!(egc_combine(&[], &[], &[]).is_err());
        assert!(egc_combine(&[1.0], &[1.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn shannon_cases() {
        assert_eq!(shannon_rate(0.0, 1e7), 0.0);
        assert_relative_eq!(shannon_rate(3.0, 1e7), 2e7, max_relative = 1e-12);
        assert_relative_eq!(shannon_rate(1.0, 1e7), 1e7, max_relative = 1e-12);
    }

    #[test]
    fn secrecy_cases() {
        assert_eq!(secrecy_rate(20e6, &[15e6, 10e6]).secrecy_rate_bps, 5e6);
        assert_eq!(secrecy_rate(5.0, &[7.0, 2.0]).secrecy_rate_bps, 0.0);
        assert_eq!(secrecy_rate(7.0, &[7.0]).secrecy_rate_bps, 0.0);
        let none = secrecy_rate(3.0, &[]);
        assert_eq!(none.max_eve_rate_bps, 0.0);
        assert_eq!(none.secrecy_rate_bps, 3.0);
    }

    #[test]
    fn relay_cases() {
        assert_eq!(relay_path_rate(10.0, 20.0), 10.0);
        assert_eq!(relay_path_rate(0.0, 20.0), 0.0);
        assert_eq!(relay_path_rate(7.0, 7.0), 7.0);
    }

    #[test]
    fn link_state_with_interference() {
        let n = NoiseModel::default();
        let s = LinkState::evaluate("a", "b", 1.0, 1e-9, 0.0, &n, 1e7);
        assert_relative_eq!(s.sinr_linear, 1000.0, max_relative = 1e-12);
        let t = s.with_added_interference(1e-12, &n, 1e7);
        assert_relative_eq!(t.sinr_linear, 500.0, max_relative = 1e-12);
        assert!(t.rate_bps < s.rate_bps);
    }

    /// Independent restatement of the combining formula.
    fn egc_oracle(a: &[f64], n: &[f64], i: &[f64]) -> f64 {
        let mut s = 0.0;
        let mut d = 0.0;
        for k in 0..a.len() {
            s += a[k];
            d += n[k];
            d += i[k];
        }
        s.powi(2) / d
    }

    proptest! {
        #[test]
        fn egc_matches_oracle(branches in prop::collection::vec((0.0..10.0f64, 1e-3..5.0f64, 0.0..5.0f64), 1..8)) {
            let a: Vec<f64> = branches.iter().map(|b| b.0).collect();
            let n: Vec<f64> = branches.iter().map(|b| b.1).collect();
            let i: Vec<f64> = branches.iter().map(|b| b.2).collect();
            let got = egc_combine(&a, &n, &i).unwrap();
            let want = egc_oracle(&a, &n, &i);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn egc_identical_branches_scale_linearly(a in 1e-6..10.0f64, n in 1e-6..1.0f64, k in 1usize..10) {
            let one = egc_combine(&[a], &[n], &[0.0]).unwrap();
            let many = egc_combine(&vec![a; k], &vec![n; k], &vec![0.0; k]).unwrap();
            prop_assert!((many / one - k as f64).abs() < 1e-9 * k as f64);
        }

        #[test]
        fn secrecy_monotonicity(legit in 0.0..1e8f64, eves in prop::collection::vec(0.0..1e8f64, 0..4),
                                bump in 0.0..1e7f64, idx in 0usize..4) {
            let base = secrecy_rate(legit, &eves).secrecy_rate_bps;
            prop_assert!(secrecy_rate(legit + bump, &eves).secrecy_rate_bps >= base);
            if !eves.is_empty() {
                let mut more = eves.clone();
                more[idx % eves.len()] += bump;
                prop_assert!(secrecy_rate(legit, &more).secrecy_rate_bps <= base);
            }
        }

        #[test]
        fn shannon_is_increasing_and_concave(s in 0.0..1e4f64) {
            let h = 1e-3 * (1.0 + s);
            let f = |x: f64| shannon_rate(x, 1e7);
            prop_assert!(f(s + h) > f(s));
            // second difference on a symmetric stencil
            let lo = (s - h).max(0.0);
            let mid = lo + h;
            prop_assert!(f(lo) + f(mid + h) - 2.0 * f(mid) <= 1e-6 * f(mid + h).max(1.0));
        }

        #[test]
        fn db_round_trips(db in -200.0..200.0f64) {
            prop_assert!((watts_to_dbm(dbm_to_watts(db)) - db).abs() <= 1e-10 * db.abs().max(1.0));
            prop_assert!((watts_to_dbw(dbw_to_watts(db)) - db).abs() <= 1e-10 * db.abs().max(1.0));
            let x = db_to_linear(db);
            prop_assert!((db_to_linear(linear_to_db(x)) / x - 1.0).abs() < 1e-10);
        }
    }
}
