//! Urban path-loss and shadowed channel gains.

use crate::error::{Error, Result};

/// Floor applied to generated linear gains so every rate expression stays
/// well-defined even under extreme shadowing draws.
pub const DEFAULT_GAIN_FLOOR: f64 = 1e-30;

/// Path loss in dB at a distance in kilometers: `128.1 + 37.6 log10(d)`.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::Domain(format!(
            "distance must be strictly positive, got {distance_km} km"
        )));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Linear channel gain `10^(-(PL(d) + shadow)/10)` with the default floor.
///
/// The shadow term is a zero-mean Gaussian draw in dB supplied by the caller,
/// which keeps this function deterministic.
pub fn channel_gain(distance_km: f64, shadow_db: f64) -> Result<f64> {
    channel_gain_floored(distance_km, shadow_db, DEFAULT_GAIN_FLOOR)
}

/// [`channel_gain`] with a configurable lower floor.
pub fn channel_gain_floored(distance_km: f64, shadow_db: f64, floor: f64) -> Result<f64> {
    let pl = path_loss_db(distance_km)?;
    let gain = 10f64.powf(-(pl + shadow_db) / 10.0);
    Ok(gain.max(floor))
}
