//! Shannon-rate arithmetic for FDMA uplinks.
//!
//! A link carries `r(b) = b * log2(1 + c/b)` bit/s over bandwidth `b`, where
//! `c = gain * power / noise_psd` is the link's SNR scale in Hz. `r` is
//! strictly increasing and strictly concave in `b` with supremum `c / ln 2`
//! (the rate ceiling), so the inverse problem -- the minimum bandwidth that
//! achieves a required rate -- has a unique solution whenever the demand is
//! below the ceiling.

use crate::error::{Error, Result};

/// Relative margin below the ceiling past which a rate demand is treated as
/// unattainable: the exact ceiling is never reached with finite bandwidth.
pub const CEILING_GUARD: f64 = 1e-12;

/// Relative tolerance of the bandwidth inversion. Downstream searches compound
/// error, so the kernel is kept much tighter than end-to-end targets.
pub const INVERSION_TOL: f64 = 1e-10;

/// A point-to-point uplink budget: channel gain (linear), transmit power and
/// noise power spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub gain: f64,
    pub power_w: f64,
    pub noise_psd: f64,
}

impl LinkBudget {
    pub fn new(gain: f64, power_w: f64, noise_psd: f64) -> Result<Self> {
        let link = LinkBudget {
            gain,
            power_w,
            noise_psd,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) || !(self.power_w > 0.0) || !(self.noise_psd > 0.0) {
            return Err(Error::Domain(format!(
                "link budget fields must be strictly positive (gain={}, power_w={}, noise_psd={})",
                self.gain, self.power_w, self.noise_psd
            )));
        }
        let c = self.snr_scale();
        if !c.is_finite() || !(c > 0.0) {
            return Err(Error::Domain(format!(
                "link SNR scale g*p/N must be finite and positive, got {c}"
            )));
        }
        Ok(())
    }

    /// SNR scale `c = g * p / N` in Hz.
    #[inline]
    pub fn snr_scale(&self) -> f64 {
        self.gain * self.power_w / self.noise_psd
    }
}

/// Rate achieved over bandwidth `b_hz`: `b * log2(1 + c/b)`.
pub fn uplink_rate(b_hz: f64, link: &LinkBudget) -> Result<f64> {
    if !(b_hz > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be strictly positive, got {b_hz}"
        )));
    }
    Ok(rate_raw(b_hz, link.snr_scale()))
}

#[inline]
pub(crate) fn rate_raw(b_hz: f64, c: f64) -> f64 {
    b_hz * (c / b_hz).ln_1p() / std::f64::consts::LN_2
}

/// Least upper bound of [`uplink_rate`] over all bandwidths: `c / ln 2`.
pub fn rate_ceiling(link: &LinkBudget) -> f64 {
    link.snr_scale() / std::f64::consts::LN_2
}

/// Minimum bandwidth `b` with `uplink_rate(b) = required_rate`.
///
/// Fails with [`Error::InfeasibleRate`] when the demand is at or above the
/// rate ceiling (after the [`CEILING_GUARD`] margin) and with a domain error
/// for non-positive demands.
pub fn min_bandwidth(required_rate: f64, link: &LinkBudget) -> Result<f64> {
    if !(required_rate > 0.0) {
        return Err(Error::Domain(format!(
            "required rate must be strictly positive, got {required_rate}"
        )));
    }
    let c = link.snr_scale();
    let ceiling = c / std::f64::consts::LN_2;
    if required_rate >= ceiling * (1.0 - CEILING_GUARD) {
        return Err(Error::InfeasibleRate {
            required: required_rate,
            ceiling,
        });
    }
    // Scale out c: with u = c/b and rho = required_rate * ln2 / c in (0,1),
    // the demand r(b) = required_rate becomes ln(1+u) = rho*u, whose unique
    // positive root determines b = c/u.
    let rho = required_rate * std::f64::consts::LN_2 / c;
    let u = solve_scaled_snr(rho, None);
    Ok(c / u)
}

/// Root of `ln(1+u) = rho*u` for `rho` in (0, 1), `u > 0`.
///
/// Bracketed Newton: the bracket (lo, hi] always contains the root, Newton
/// proposals outside it fall back to bisection, so convergence is guaranteed
/// and typically quadratic. `hint`, when given, seeds the bracket from a
/// nearby previous solution.
#[inline]
pub(crate) fn solve_scaled_snr(rho: f64, hint: Option<f64>) -> f64 {
    debug_assert!(rho > 0.0 && rho < 1.0);
    // g(u) = ln(1+u) - rho*u; g > 0 left of the root, g < 0 right of it.
    let g = |u: f64| u.ln_1p() - rho * u;

    // Establish the bracket: double until g(hi) <= 0.
    let mut hi = match hint {
        Some(h) if h > 0.0 && h.is_finite() => h,
        _ => {
            // For rho near 1 the root is ~2(1-rho); for small rho it grows
            // like ln(1/rho)/rho.
            let guess = (2.0 * (1.0 - rho)).max((1.0 / rho).ln() / rho);
            guess.max(1e-300)
        }
    };
    let mut lo = 0.0_f64;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    let mut x = hi;
    for _ in 0..200 {
        let gx = g(x);
        if gx > 0.0 {
            lo = x;
        } else if gx < 0.0 {
            hi = x;
        } else {
            return x;
        }
        let dgx = 1.0 / (1.0 + x) - rho;
        let newton = x - gx / dgx;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-14 * hi || (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
    }
    0.5 * (lo + hi)
}
