//! Reproducible wireless system instances.
//!
//! A [`Scenario`] bundles everything one experiment needs: radio budgets,
//! compute caps, per-user placement/channel/compute profiles and the learning
//! hyperparameters. Instances are generated deterministically from a config
//! and a seed; all types are plain data, immutable after creation and safe to
//! share across threads.

mod channel;
mod config;
mod generate;

pub use channel::{channel_gain, channel_gain_floored, path_loss_db, DEFAULT_GAIN_FLOOR};
pub use config::{load_config, SimConfig};
pub use generate::generate_scenario;

use serde::{Deserialize, Serialize};

use crate::delay::LearningHyperParams;
use crate::error::{Error, Result};

/// Radio-side budgets shared by all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Total uplink bandwidth of the fed-server pool (adapter uploads), Hz.
    pub total_bandwidth_fed_hz: f64,
    /// Total uplink bandwidth of the main-server pool (cut-layer uploads), Hz.
    pub total_bandwidth_main_hz: f64,
    /// Noise power spectral density, W/Hz (same for both pools).
    pub noise_psd_w_per_hz: f64,
    /// Bits uploaded to the fed server once per global round.
    pub payload_fed_bits: f64,
    /// Bits uploaded to the main server once per local iteration.
    pub payload_main_bits: f64,
    /// Shadow-fading standard deviation, dB.
    pub shadow_sigma_db: f64,
    /// Side length of the square cell, meters.
    pub cell_side_m: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("total_bandwidth_fed_hz", self.total_bandwidth_fed_hz),
            ("total_bandwidth_main_hz", self.total_bandwidth_main_hz),
            ("noise_psd_w_per_hz", self.noise_psd_w_per_hz),
            ("payload_fed_bits", self.payload_fed_bits),
            ("payload_main_bits", self.payload_main_bits),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("cell_side_m", self.cell_side_m),
        ];
        let bad: Vec<&str> = fields
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(k, _)| *k)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Config(format!(
                "radio parameters must be strictly positive and finite: {}",
                bad.join(", ")
            )));
        }
        Ok(())
    }
}

/// One user's placement, channels, radio limits and compute profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u32,
    /// Position relative to the base station at the cell center, meters.
    pub position_m: [f64; 2],
    /// Linear channel gain towards the fed server.
    pub gain_fed: f64,
    /// Linear channel gain towards the main server.
    pub gain_main: f64,
    /// Maximum transmit power towards the fed server, W.
    pub p_max_fed_w: f64,
    /// Maximum transmit power towards the main server, W.
    pub p_max_main_w: f64,
    /// Maximum CPU frequency, Hz.
    pub f_max_hz: f64,
    /// CPU cycles needed to process one data sample through the full model.
    pub cycles_per_sample: f64,
    /// Number of local data samples.
    pub num_samples: u64,
}

impl UserProfile {
    pub fn validate(&self, cell_side_m: f64) -> Result<()> {
        let mut bad = Vec::new();
        for (k, v) in [("gain_fed", self.gain_fed), ("gain_main", self.gain_main)] {
            if !(v > 0.0 && v <= 1.0) {
                bad.push(format!("{k}={v} not in (0, 1]"));
            }
        }
        for (k, v) in [
            ("p_max_fed_w", self.p_max_fed_w),
            ("p_max_main_w", self.p_max_main_w),
            ("f_max_hz", self.f_max_hz),
            ("cycles_per_sample", self.cycles_per_sample),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{k}={v} not strictly positive"));
            }
        }
        if self.num_samples == 0 {
            bad.push("num_samples=0".into());
        }
        let half = cell_side_m / 2.0;
        if self.position_m.iter().any(|p| p.abs() > half) {
            bad.push(format!(
                "position {:?} outside the {}m cell",
                self.position_m, cell_side_m
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "user {} profile invalid: {}",
                self.user_id,
                bad.join("; ")
            )))
        }
    }
}

/// Main-server compute cap and the admissible range of the split ratio
/// (the fraction of trainable parameters living on the client).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeProfile {
    pub f_s_max_hz: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl ComputeProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_s_max_hz > 0.0 && self.f_s_max_hz.is_finite()) {
            return Err(Error::Config(format!(
                "f_s_max_hz must be strictly positive, got {}",
                self.f_s_max_hz
            )));
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max && self.a_max < 1.0) {
            return Err(Error::Config(format!(
                "split-ratio bounds must satisfy 0 < a_min < a_max < 1: a_min={}, a_max={}",
                self.a_min, self.a_max
            )));
        }
        Ok(())
    }
}

/// A complete system instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub radio: RadioParams,
    pub compute: ComputeProfile,
    pub users: Vec<UserProfile>,
    pub learn: LearningHyperParams,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.compute.validate()?;
        if self.users.is_empty() {
            return Err(Error::Config("scenario needs at least one user".into()));
        }
        let mut ids: Vec<u32> = self.users.iter().map(|u| u.user_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.users.len() {
            return Err(Error::Config("user_ids must be unique".into()));
        }
        for u in &self.users {
            u.validate(self.radio.cell_side_m)?;
        }
        self.learn.validate()?;
        Ok(())
    }

    /// Clone with both per-user power caps set from a dBm value; geometry,
    /// shadowing and compute draws stay fixed. Used by sweeps so the swept
    /// variable is isolated.
    pub fn with_p_max_dbm(&self, p_max_dbm: f64) -> Scenario {
        let p_w = dbm_to_watts(p_max_dbm);
        let mut s = self.clone();
        for u in &mut s.users {
            u.p_max_fed_w = p_w;
            u.p_max_main_w = p_w;
        }
        s
    }

    /// Clone with both pool bandwidths set from a MHz value.
    pub fn with_bandwidth_mhz(&self, bandwidth_mhz: f64) -> Scenario {
        let mut s = self.clone();
        s.radio.total_bandwidth_fed_hz = bandwidth_mhz * 1e6;
        s.radio.total_bandwidth_main_hz = bandwidth_mhz * 1e6;
        s
    }
}

/// dBm to linear watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dbm_conversion() {
        assert_relative_eq!(dbm_to_watts(10.0), 0.01, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(-174.0), 3.9810717055349725e-21, max_relative = 1e-12);
    }

    #[test]
    fn compute_profile_ordering_enforced() {
        let bad = ComputeProfile {
            f_s_max_hz: 1e10,
            a_min: 0.5,
            a_max: 0.2,
        };
        assert!(bad.validate().is_err());
    }
}
