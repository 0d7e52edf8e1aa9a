//! Experiment configuration: a flat TOML document.
//!
//! Every key has a default, so an empty file is a valid config. Unknown keys
//! are rejected, and validation reports every offending key by name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay::LearningHyperParams;
use crate::error::{Error, Result};
use crate::scenario::{dbm_to_watts, ComputeProfile, RadioParams};

/// The only path-loss model this lab implements.
pub const PATHLOSS_MODEL: &str = "128.1+37.6log10(d_km)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Number of users in the cell.
    pub users: u32,
    /// Square cell side, meters; the base station sits at the center.
    pub cell_side_m: f64,
    /// Path-loss model identifier (only [`PATHLOSS_MODEL`] is supported).
    pub pathloss: String,
    /// Shadow-fading standard deviation, dB.
    pub shadow_sigma_db: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Per-user maximum transmit power, dBm (both uplinks unless overridden).
    pub p_max_dbm: f64,
    /// Override for the fed-server uplink power, dBm.
    pub p_max_fed_dbm: Option<f64>,
    /// Override for the main-server uplink power, dBm.
    pub p_max_main_dbm: Option<f64>,
    /// Per-user maximum CPU frequency, GHz.
    pub f_max_user_ghz: f64,
    /// Main-server CPU frequency, GHz. A tooling default, not a measured
    /// value; must exceed every user's frequency for the fixed split ratio.
    pub f_max_server_ghz: f64,
    /// Fed-server upload pool, MHz.
    pub bandwidth_fed_mhz: f64,
    /// Main-server upload pool, MHz.
    pub bandwidth_main_mhz: f64,
    /// Adapter-update payload to the fed server, kbit per round.
    pub s_c_kbits: f64,
    /// Cut-layer payload to the main server, kbit per local iteration.
    pub s_kbits: f64,
    /// Uniform range of per-sample CPU cycles, [low, high].
    pub cycles_per_sample_range: [f64; 2],
    /// Total data samples split evenly across users.
    pub total_samples: u64,
    /// Surrogate weight on the global gradient.
    pub xi: f64,
    /// Gradient-descent step size.
    pub delta: f64,
    /// Target global accuracy.
    pub eps0: f64,
    /// Smoothness constant of the local losses. A tooling default.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Strong-convexity constant of the local losses. A tooling default.
    pub gamma: f64,
    /// Lower bound on the client share of trainable parameters.
    pub a_min: f64,
    /// Upper bound on the client share of trainable parameters.
    pub a_max: f64,
    /// Grid step of the local-accuracy sweep.
    pub eta_step: f64,
    /// Base RNG seed.
    pub seed: u64,
    /// Floor applied to generated linear channel gains.
    pub gain_floor: f64,

    // ---- sweep section (flat keys) ----
    /// Swept variable: "p_max_dbm", "bandwidth_mhz" or "users".
    pub sweep_var: String,
    /// Values of the swept variable.
    pub sweep_values: Vec<f64>,
    /// Scenario seeds per sweep point (seed, seed+1, ...).
    pub sweep_repetitions: u32,
    /// Strategies to run: subset of "proposed", "eb", "fe", "ba".
    pub sweep_strategies: Vec<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            users: 50,
            cell_side_m: 500.0,
            pathloss: PATHLOSS_MODEL.to_string(),
            shadow_sigma_db: 8.0,
            noise_psd_dbm_hz: -174.0,
            p_max_dbm: 10.0,
            p_max_fed_dbm: None,
            p_max_main_dbm: None,
            f_max_user_ghz: 2.0,
            f_max_server_ghz: 10.0,
            bandwidth_fed_mhz: 20.0,
            bandwidth_main_mhz: 20.0,
            s_c_kbits: 28.1,
            s_kbits: 281.0,
            cycles_per_sample_range: [1e4, 3e4],
            total_samples: 60021,
            xi: 0.1,
            delta: 0.1,
            eps0: 1e-3,
            lipschitz: 4.0,
            gamma: 2.0,
            a_min: 0.1,
            a_max: 0.9,
            eta_step: 0.01,
            seed: 7,
            gain_floor: 1e-30,
            sweep_var: "p_max_dbm".to_string(),
            sweep_values: (0..=10).map(|i| (2 * i) as f64).collect(),
            sweep_repetitions: 5,
            sweep_strategies: vec![
                "proposed".to_string(),
                "eb".to_string(),
                "fe".to_string(),
                "ba".to_string(),
            ],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let positive = [
            ("cell_side_m", self.cell_side_m),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("f_max_user_ghz", self.f_max_user_ghz),
            ("f_max_server_ghz", self.f_max_server_ghz),
            ("bandwidth_fed_mhz", self.bandwidth_fed_mhz),
            ("bandwidth_main_mhz", self.bandwidth_main_mhz),
            ("s_c_kbits", self.s_c_kbits),
            ("s_kbits", self.s_kbits),
            ("gain_floor", self.gain_floor),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{k} must be strictly positive, got {v}"));
            }
        }
        if self.users == 0 {
            bad.push("users must be at least 1".into());
        }
        if self.pathloss != PATHLOSS_MODEL {
            bad.push(format!(
                "pathloss: unsupported model {:?}, expected {PATHLOSS_MODEL:?}",
                self.pathloss
            ));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            bad.push("noise_psd_dbm_hz must be finite".into());
        }
        let [c_lo, c_hi] = self.cycles_per_sample_range;
        if !(c_lo > 0.0 && c_hi >= c_lo && c_hi.is_finite()) {
            bad.push(format!(
                "cycles_per_sample_range must be 0 < low <= high, got [{c_lo}, {c_hi}]"
            ));
        }
        if self.total_samples < self.users as u64 {
            bad.push(format!(
                "total_samples ({}) must be at least users ({})",
                self.total_samples, self.users
            ));
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max && self.a_max < 1.0) {
            bad.push(format!(
                "a_min, a_max must satisfy 0 < a_min < a_max < 1, got a_min={}, a_max={}",
                self.a_min, self.a_max
            ));
        }
        if !(self.eta_step > 0.0 && self.eta_step < 1.0) {
            bad.push(format!(
                "eta_step must lie in (0, 1), got {}",
                self.eta_step
            ));
        }
        if let Err(Error::Config(msg) | Error::Hyperparameter(msg)) = self.hyper().and_then(|h| h.validate()) {
            bad.push(msg);
        }
        if self.sweep_values.is_empty() {
            bad.push("sweep_values must be non-empty".into());
        }
        if self.sweep_repetitions == 0 {
            bad.push("sweep_repetitions must be at least 1".into());
        }
        match self.sweep_var.as_str() {
            "p_max_dbm" | "bandwidth_mhz" | "users" => {}
            other => bad.push(format!(
                "sweep_var must be one of p_max_dbm, bandwidth_mhz, users; got {other:?}"
            )),
        }
        for s in &self.sweep_strategies {
            if !matches!(s.as_str(), "proposed" | "eb" | "fe" | "ba") {
                bad.push(format!("sweep_strategies: unknown strategy {s:?}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    pub fn noise_psd_w_per_hz(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz)
    }

    pub fn p_fed_w(&self) -> f64 {
        dbm_to_watts(self.p_max_fed_dbm.unwrap_or(self.p_max_dbm))
    }

    pub fn p_main_w(&self) -> f64 {
        dbm_to_watts(self.p_max_main_dbm.unwrap_or(self.p_max_dbm))
    }

    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            total_bandwidth_fed_hz: self.bandwidth_fed_mhz * 1e6,
            total_bandwidth_main_hz: self.bandwidth_main_mhz * 1e6,
            noise_psd_w_per_hz: self.noise_psd_w_per_hz(),
            payload_fed_bits: self.s_c_kbits * 1e3,
            payload_main_bits: self.s_kbits * 1e3,
            shadow_sigma_db: self.shadow_sigma_db,
            cell_side_m: self.cell_side_m,
        }
    }

    pub fn compute_profile(&self) -> ComputeProfile {
        ComputeProfile {
            f_s_max_hz: self.f_max_server_ghz * 1e9,
            a_min: self.a_min,
            a_max: self.a_max,
        }
    }

    pub fn hyper(&self) -> Result<LearningHyperParams> {
        LearningHyperParams::new(self.lipschitz, self.gamma, self.xi, self.delta, self.eps0)
    }
}

/// Load and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
