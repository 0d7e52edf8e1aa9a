//! Latency components of one training run.
//!
//! The convergence bounds give two iteration counts: the number of global
//! rounds `a / (1 - eta)` and the number of local gradient steps per round
//! `v * log2(1/eta)`. Both are used as real numbers inside the latency
//! objective; callers needing a count take the ceiling. A user's round
//! latency stacks client compute, main-server compute, one fed-server upload
//! per round and one main-server upload per local iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::{uplink_rate, LinkBudget};
use crate::scenario::UserProfile;

/// Learning constants with the hypotheses the convergence bounds need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningHyperParams {
    /// Smoothness constant L of the local losses.
    pub lipschitz: f64,
    /// Strong-convexity constant gamma.
    pub strong_convexity: f64,
    /// Surrogate weight xi on the global gradient.
    pub surrogate_weight: f64,
    /// Gradient-descent step size delta.
    pub step_size: f64,
    /// Target global accuracy eps0.
    pub global_accuracy: f64,
}

impl LearningHyperParams {
    pub fn new(
        lipschitz: f64,
        strong_convexity: f64,
        surrogate_weight: f64,
        step_size: f64,
        global_accuracy: f64,
    ) -> Result<Self> {
        let h = LearningHyperParams {
            lipschitz,
            strong_convexity,
            surrogate_weight,
            step_size,
            global_accuracy,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.strong_convexity > 0.0 && self.strong_convexity <= self.lipschitz) {
            bad.push(format!(
                "gamma must satisfy 0 < gamma <= L (gamma={}, L={})",
                self.strong_convexity, self.lipschitz
            ));
        }
        if !(self.surrogate_weight > 0.0
            && self.surrogate_weight <= self.strong_convexity / self.lipschitz)
        {
            bad.push(format!(
                "xi must satisfy 0 < xi <= gamma/L (xi={}, gamma/L={})",
                self.surrogate_weight,
                self.strong_convexity / self.lipschitz
            ));
        }
        if !(self.step_size > 0.0 && self.step_size < 2.0 / self.lipschitz) {
            bad.push(format!(
                "delta must satisfy 0 < delta < 2/L (delta={}, 2/L={})",
                self.step_size,
                2.0 / self.lipschitz
            ));
        }
        if !(self.global_accuracy > 0.0 && self.global_accuracy < 1.0) {
            bad.push(format!(
                "eps0 must lie in (0, 1), got {}",
                self.global_accuracy
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Hyperparameter(bad.join("; ")))
        }
    }
}

/// Per-round latency components of one user and the assembled total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    /// Client-side compute per round, s.
    pub compute_client_s: f64,
    /// Main-server compute per round, s.
    pub compute_server_s: f64,
    /// Fed-server upload time per round, s.
    pub upload_fed_s: f64,
    /// Main-server upload time per local iteration, s.
    pub upload_main_per_localiter_s: f64,
    /// Local iterations per round, real-valued.
    pub local_iters: f64,
    /// Global rounds, real-valued.
    pub global_iters: f64,
    /// Total latency, s.
    pub total_s: f64,
}

/// Iteration constant `a = (2 L^2 / (gamma^2 xi)) ln(1/eps0)`.
pub fn iteration_constant_a(h: &LearningHyperParams) -> f64 {
    2.0 * h.lipschitz * h.lipschitz
        / (h.strong_convexity * h.strong_convexity * h.surrogate_weight)
        * (1.0 / h.global_accuracy).ln()
}

/// Local-iteration coefficient `v = 2 / ((2 - L*delta) * delta * gamma)`.
pub fn local_iter_coeff_v(h: &LearningHyperParams) -> Result<f64> {
    if h.step_size >= 2.0 / h.lipschitz {
        return Err(Error::Hyperparameter(format!(
            "delta={} violates delta < 2/L={}",
            h.step_size,
            2.0 / h.lipschitz
        )));
    }
    Ok(2.0 / ((2.0 - h.lipschitz * h.step_size) * h.step_size * h.strong_convexity))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!(
            "local accuracy eta must lie in (0, 1), got {eta}"
        )));
    }
    Ok(())
}

/// Global rounds sufficient for the target accuracy: `a / (1 - eta)`.
pub fn global_iterations(eta: f64, h: &LearningHyperParams) -> Result<f64> {
    check_eta(eta)?;
    Ok(iteration_constant_a(h) / (1.0 - eta))
}

/// Local gradient steps sufficient for accuracy `eta`: `v * log2(1/eta)`.
pub fn local_iterations(eta: f64, h: &LearningHyperParams) -> Result<f64> {
    check_eta(eta)?;
    Ok(local_iter_coeff_v(h)? * (1.0 / eta).log2())
}

/// Client and main-server compute time per round for one user.
///
/// With `E_k = v * W_k * D_k` total cycles, the client handles the fraction
/// `A` of the model and the server the rest:
/// `tau_k = E_k log2(1/eta) A / f_k`, `tau_s = E_k log2(1/eta) (1-A) / f_s`.
pub fn compute_delay(
    eta: f64,
    split_ratio: f64,
    user: &UserProfile,
    f_server_hz: f64,
    h: &LearningHyperParams,
) -> Result<(f64, f64)> {
    check_eta(eta)?;
    if !(split_ratio > 0.0 && split_ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "split ratio must lie in (0, 1], got {split_ratio}"
        )));
    }
    if !(f_server_hz > 0.0) {
        return Err(Error::Domain(format!(
            "server frequency must be positive, got {f_server_hz}"
        )));
    }
    let e_k = local_iter_coeff_v(h)? * user.cycles_per_sample * user.num_samples as f64;
    let work = e_k * (1.0 / eta).log2();
    let tau_client = work * split_ratio / user.f_max_hz;
    let tau_server = work * (1.0 - split_ratio) / f_server_hz;
    Ok((tau_client, tau_server))
}

/// Full round latency of one user:
/// `T_k = I0 * (tau_k + tau_s + t_fed + local_iters * t_main)`.
pub fn user_round_latency(
    eta: f64,
    split_ratio: f64,
    user: &UserProfile,
    f_server_hz: f64,
    t_fed_s: f64,
    t_main_s: f64,
    h: &LearningHyperParams,
) -> Result<LatencyBreakdown> {
    if t_fed_s < 0.0 || t_main_s < 0.0 {
        return Err(Error::Domain(format!(
            "upload times must be non-negative, got t_fed={t_fed_s}, t_main={t_main_s}"
        )));
    }
    let (tau_client, tau_server) = compute_delay(eta, split_ratio, user, f_server_hz, h)?;
    let local = local_iterations(eta, h)?;
    let global = global_iterations(eta, h)?;
    let total = global * (tau_client + tau_server + t_fed_s + local * t_main_s);
    Ok(LatencyBreakdown {
        compute_client_s: tau_client,
        compute_server_s: tau_server,
        upload_fed_s: t_fed_s,
        upload_main_per_localiter_s: t_main_s,
        local_iters: local,
        global_iters: global,
        total_s: total,
    })
}

/// Whether a payload fits in the given time over the given bandwidth:
/// `t * r(b) >= payload`.
pub fn transmission_feasible(
    t_s: f64,
    bandwidth_hz: f64,
    link: &LinkBudget,
    payload_bits: f64,
) -> Result<bool> {
    if !(t_s > 0.0) {
        return Err(Error::Domain(format!(
            "transmission time must be positive, got {t_s}"
        )));
    }
    Ok(t_s * uplink_rate(bandwidth_hz, link)? >= payload_bits)
}
