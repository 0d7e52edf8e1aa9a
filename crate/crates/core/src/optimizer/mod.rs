//! Latency-minimal radio/compute resource allocation.
//!
//! With compute frequencies, transmit powers and the split ratio fixed at
//! their analytically optimal values, the remaining problem at a given local
//! accuracy `eta` is: choose per-user upload times and bandwidths so the
//! worst per-user training latency is minimal, subject to the two uplink
//! bandwidth pools. The structure used here:
//!
//! - outer bisection on the latency target `T` (feasibility is monotone in
//!   `T`);
//! - inner search over a single weight `lambda` trading the two pools: each
//!   user independently minimizes `b_fed + lambda * b_main` over its time
//!   budget, and the pool sums move monotonically in `lambda`;
//! - per-user 1-D convex minimization over the time split.
//!
//! The solver is deterministic; solves at distinct `eta` values are
//! independent and may run in parallel, with the winner picked by an ordered
//! fold (ties go to the smaller `eta`).

pub mod oracle;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::delay::{
    global_iterations, iteration_constant_a, local_iter_coeff_v, local_iterations,
    LatencyBreakdown, LearningHyperParams,
};
use crate::error::{Error, Result};
use crate::parallel::map_collect;
use crate::rate::{rate_raw, solve_scaled_snr};
use crate::scenario::Scenario;

/// Fixed local accuracy used by the FE and BA reference strategies.
pub const ETA_FIXED_BASELINE: f64 = 0.1;

/// Split-ratio grid step used when the fixed-split reduction does not apply.
pub const SPLIT_RATIO_FALLBACK_STEP: f64 = 0.05;

const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e12;
/// Relative window below which the lambda search gives up on a latency
/// target (treated as infeasible; the outer bisection raises the target).
const LAMBDA_WINDOW_TOL: f64 = 1e-10;
/// Interval-relative tolerance of the per-user time-split search.
const SPLIT_TOL: f64 = 1e-8;
/// Relative tolerance of the outer latency bisection.
const LATENCY_TOL: f64 = 1e-9;

/// One user's link towards one pool, reduced to the two constants the
/// allocation needs: the SNR scale `c` and the rate-ceiling time floor
/// `t_min = payload * ln2 / c` (no finite bandwidth delivers the payload
/// faster).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolLink {
    pub c: f64,
    pub t_min: f64,
}

impl PoolLink {
    pub fn new(gain: f64, power_w: f64, noise_psd: f64, payload_bits: f64) -> PoolLink {
        let c = gain * power_w / noise_psd;
        PoolLink {
            c,
            t_min: payload_bits * std::f64::consts::LN_2 / c,
        }
    }

    /// Minimum bandwidth delivering the payload in time `t > t_min`, plus its
    /// derivative in `t` and the scaled-SNR root (reusable as a warm start).
    #[inline]
    fn bandwidth_and_slope(&self, t: f64, hint: Option<f64>) -> (f64, f64, f64) {
        let rho = self.t_min / t;
        if rho >= 1.0 - 5e-16 {
            return (f64::INFINITY, f64::NEG_INFINITY, f64::NAN);
        }
        let u = solve_scaled_snr(rho, hint);
        let b = self.c / u;
        let slope = -(self.c * rho) / (u * t * (rho - 1.0 / (1.0 + u)));
        (b, slope, u)
    }

    /// Minimum bandwidth delivering the payload in time `t`.
    #[inline]
    pub fn min_bandwidth_for_time(&self, t: f64) -> f64 {
        let rho = self.t_min / t;
        if rho >= 1.0 - 5e-16 {
            return f64::INFINITY;
        }
        self.c / solve_scaled_snr(rho, None)
    }
}

/// One user after the analytic reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedUser {
    pub user_id: u32,
    /// Client compute seconds per unit of `log2(1/eta)`: `E_k * A / f_k`.
    pub compute_client_coeff: f64,
    /// Server compute seconds per unit of `log2(1/eta)`: `E_k * (1-A) / f_s`.
    pub compute_server_coeff: f64,
    pub fed: PoolLink,
    pub main: PoolLink,
}

impl ReducedUser {
    /// Combined compute coefficient `E_k * (A/f_k + (1-A)/f_s)`.
    pub fn compute_coeff(&self) -> f64 {
        self.compute_client_coeff + self.compute_server_coeff
    }
}

/// The allocation problem after fixing frequencies, powers and split ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub users: Vec<ReducedUser>,
    pub bandwidth_fed_hz: f64,
    pub bandwidth_main_hz: f64,
    pub payload_fed_bits: f64,
    pub payload_main_bits: f64,
    pub hyper: LearningHyperParams,
    /// The split ratio the reduction fixed (normally `a_min`).
    pub split_ratio: f64,
}

/// Fix frequencies and powers at their maxima and the split ratio at its
/// lower bound, precomputing each user's compute coefficient and link
/// constants.
///
/// Fails with [`Error::ReductionInvalid`] when the main server is not
/// strictly faster than every user, in which case the split ratio must be
/// swept instead (see [`optimize`], which handles this automatically).
pub fn reduce(scenario: &Scenario) -> Result<ReducedParams> {
    let f_s = scenario.compute.f_s_max_hz;
    if let Some(u) = scenario.users.iter().find(|u| u.f_max_hz >= f_s) {
        return Err(Error::ReductionInvalid(format!(
            "server frequency {} Hz does not exceed user {}'s {} Hz; \
             the fixed split ratio is not optimal, sweep the split ratio instead",
            f_s, u.user_id, u.f_max_hz
        )));
    }
    reduce_with_split_ratio(scenario, scenario.compute.a_min)
}

/// [`reduce`] with an explicit split ratio (used by the fallback sweep).
pub fn reduce_with_split_ratio(scenario: &Scenario, split_ratio: f64) -> Result<ReducedParams> {
    scenario.validate()?;
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(Error::Domain(format!(
            "split ratio must lie in (0, 1), got {split_ratio}"
        )));
    }
    let v = local_iter_coeff_v(&scenario.learn)?;
    let radio = &scenario.radio;
    let users = scenario
        .users
        .iter()
        .map(|u| {
            let e_k = v * u.cycles_per_sample * u.num_samples as f64;
            ReducedUser {
                user_id: u.user_id,
                compute_client_coeff: e_k * split_ratio / u.f_max_hz,
                compute_server_coeff: e_k * (1.0 - split_ratio) / scenario.compute.f_s_max_hz,
                fed: PoolLink::new(
                    u.gain_fed,
                    u.p_max_fed_w,
                    radio.noise_psd_w_per_hz,
                    radio.payload_fed_bits,
                ),
                main: PoolLink::new(
                    u.gain_main,
                    u.p_max_main_w,
                    radio.noise_psd_w_per_hz,
                    radio.payload_main_bits,
                ),
            }
        })
        .collect();
    Ok(ReducedParams {
        users,
        bandwidth_fed_hz: radio.total_bandwidth_fed_hz,
        bandwidth_main_hz: radio.total_bandwidth_main_hz,
        payload_fed_bits: radio.payload_fed_bits,
        payload_main_bits: radio.payload_main_bits,
        hyper: scenario.learn,
        split_ratio,
    })
}

/// One user's slice of an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserAllocation {
    pub user_id: u32,
    /// Upload time to the fed server per round, s.
    pub t_fed: f64,
    /// Upload time to the main server per local iteration, s.
    pub t_main: f64,
    /// Bandwidth from the fed pool, Hz.
    pub b_fed: f64,
    /// Bandwidth from the main pool, Hz.
    pub b_main: f64,
    pub breakdown: LatencyBreakdown,
    /// Optimality-condition residuals: time-budget equality, main-pool rate
    /// equality, fed-pool rate equality (relative).
    pub residuals: [f64; 3],
}

/// A complete allocation at one local accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSolution {
    pub eta: f64,
    pub split_ratio: f64,
    /// Achieved worst-user latency, s.
    pub latency_s: f64,
    pub users: Vec<UserAllocation>,
    pub sum_b_fed: f64,
    pub sum_b_main: f64,
    pub max_residual: f64,
    pub feasible: bool,
}

/// Strategy tags for result reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Joint bandwidth + local-accuracy optimization.
    Proposed,
    /// Equal bandwidth shares, local accuracy optimized.
    Eb,
    /// Fixed local accuracy, bandwidth optimized.
    Fe,
    /// Fixed local accuracy and equal bandwidth shares.
    Ba,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Proposed, Strategy::Eb, Strategy::Fe, Strategy::Ba];

    pub fn tag(&self) -> &'static str {
        match self {
            Strategy::Proposed => "PROPOSED",
            Strategy::Eb => "EB",
            Strategy::Fe => "FE",
            Strategy::Ba => "BA",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Strategy::Proposed),
            "eb" => Ok(Strategy::Eb),
            "fe" => Ok(Strategy::Fe),
            "ba" => Ok(Strategy::Ba),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Latency and allocation produced by one strategy at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    /// Value of the swept variable this result belongs to, if any.
    pub operating_point: Option<f64>,
    pub solution: AllocationSolution,
    pub wall_time_s: f64,
}

/// One entry of the local-accuracy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    pub eta: f64,
    pub latency_s: f64,
}

/// Output of [`optimize`]: the best allocation and the full sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub best: AllocationSolution,
    pub sweep: Vec<EtaPoint>,
}

/// The local-accuracy grid `{step, 2 step, ...}` restricted to (0, 1); both
/// endpoints are excluded (each makes one iteration count blow up).
pub fn eta_grid(step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut i = 1u32;
    loop {
        let eta = f64::from(i) * step;
        if eta >= 1.0 - step / 2.0 {
            break;
        }
        grid.push(eta);
        i += 1;
    }
    grid
}

/// Per-eta constants of the reduced problem.
#[derive(Debug, Clone, Copy)]
struct EtaContext {
    eta: f64,
    /// `log2(1/eta)`.
    log2_inv: f64,
    /// Local iterations per round `m = v log2(1/eta)`.
    local_iters: f64,
    /// Global rounds `I0 = a/(1-eta)`.
    global_iters: f64,
}

impl EtaContext {
    fn new(eta: f64, hyper: &LearningHyperParams) -> Result<EtaContext> {
        Ok(EtaContext {
            eta,
            log2_inv: (1.0 / eta).log2(),
            local_iters: local_iterations(eta, hyper)?,
            global_iters: global_iterations(eta, hyper)?,
        })
    }

    /// Per-round time budget left for uploads at latency target `t_total`.
    #[inline]
    fn time_budget(&self, user: &ReducedUser, t_total: f64) -> f64 {
        t_total / self.global_iters - user.compute_coeff() * self.log2_inv
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct UserScratch {
    q: f64,
    lo: f64,
    hi: f64,
    t_fed: f64,
    b_fed: f64,
    b_main: f64,
    u_fed: f64,
    u_main: f64,
}

enum LambdaClass {
    BothFit,
    FedOver,
    MainOver,
    /// Dual certificate: the minimal `sum_fed + lambda * sum_main` exceeds
    /// `B_fed + lambda * B_main`, so no allocation fits at this target.
    CertifiedInfeasible,
}

/// Stateful solver for one `(eta, reduced)` subproblem; keeps warm starts
/// across the latency bisection.
struct SubproblemSolver<'a> {
    red: &'a ReducedParams,
    ctx: EtaContext,
    scratch: Vec<UserScratch>,
    warm_lambda: f64,
}

impl<'a> SubproblemSolver<'a> {
    fn new(eta: f64, red: &'a ReducedParams) -> Result<Self> {
        Ok(SubproblemSolver {
            red,
            ctx: EtaContext::new(eta, &red.hyper)?,
            scratch: vec![UserScratch::default(); red.users.len()],
            warm_lambda: 1.0,
        })
    }

    /// Recompute per-user budgets and split intervals at a latency target.
    /// Returns false when some user cannot fit both payloads at any
    /// bandwidth.
    fn set_budgets(&mut self, t_total: f64) -> bool {
        let m = self.ctx.local_iters;
        for (user, sc) in self.red.users.iter().zip(self.scratch.iter_mut()) {
            let q = self.ctx.time_budget(user, t_total);
            let lo0 = user.fed.t_min;
            let hi0 = q - m * user.main.t_min;
            let width = hi0 - lo0;
            if !(q > 0.0) || !(width > 0.0) {
                return false;
            }
            let margin = 1e-12 * width;
            sc.q = q;
            sc.lo = lo0 + margin;
            sc.hi = hi0 - margin;
            if !(sc.lo < sc.hi) {
                return false;
            }
        }
        true
    }

    /// Solve every user's split at the given pool weight and return the pool
    /// sums; per-user results stay in scratch.
    fn pools_at(&mut self, lambda: f64) -> (f64, f64) {
        let m = self.ctx.local_iters;
        let (b_fed_cap, b_main_cap) = (self.red.bandwidth_fed_hz, self.red.bandwidth_main_hz);
        let mut sum_fed = 0.0;
        let mut sum_main = 0.0;
        for (user, sc) in self.red.users.iter().zip(self.scratch.iter_mut()) {
            split_user(user, sc, m, lambda);
            sum_fed += sc.b_fed;
            sum_main += sc.b_main;
            if sum_fed > b_fed_cap && sum_main > b_main_cap {
                // Both pools already blown; the classification cannot change.
                return (f64::INFINITY, f64::INFINITY);
            }
        }
        (sum_fed, sum_main)
    }

    /// Classify a pool weight; the second element is the log pool-balance
    /// ratio `ln((S_f/B_f) / (S_m/B_m))`, strictly increasing in `lambda`,
    /// used for secant proposals.
    fn classify(&mut self, lambda: f64) -> (LambdaClass, f64) {
        let (sf, sm) = self.pools_at(lambda);
        let fed_over = sf > self.red.bandwidth_fed_hz;
        let main_over = sm > self.red.bandwidth_main_hz;
        let balance = ((sf / self.red.bandwidth_fed_hz) / (sm / self.red.bandwidth_main_hz)).ln();
        // Weak duality: (sf, sm) minimizes sf + lambda*sm over all splits, so
        // exceeding the same combination of the budgets proves infeasibility
        // outright. The margin covers the split-search tolerance.
        let bound = self.red.bandwidth_fed_hz + lambda * self.red.bandwidth_main_hz;
        let class = match (fed_over, main_over) {
            (false, false) => LambdaClass::BothFit,
            (true, true) => LambdaClass::CertifiedInfeasible,
            _ if sf + lambda * sm > bound * (1.0 + 1e-7) => LambdaClass::CertifiedInfeasible,
            (true, false) => LambdaClass::FedOver,
            (false, true) => LambdaClass::MainOver,
        };
        (class, balance)
    }

    /// Search the pool weight for a split fitting both pools. The fed sum is
    /// non-decreasing and the main sum non-increasing in `lambda`; the search
    /// brackets the balance point with secant proposals in log space and
    /// stops early on either a fitting split or a duality certificate.
    fn lambda_search(&mut self) -> bool {
        let warm = self.warm_lambda.clamp(LAMBDA_MIN, LAMBDA_MAX);
        let (mut lo, mut hi);
        let mut prev: Option<(f64, f64)> = None;
        match self.classify(warm) {
            (LambdaClass::BothFit, _) => {
                self.warm_lambda = warm;
                return true;
            }
            (LambdaClass::CertifiedInfeasible, _) => return false,
            (LambdaClass::FedOver, r) => {
                // Need a smaller weight; expand downwards for a lower end.
                if r.is_finite() {
                    prev = Some((warm.ln(), r));
                }
                hi = warm;
                lo = warm;
                loop {
                    if lo <= LAMBDA_MIN {
                        return false; // fed pool over even at minimal weight
                    }
                    lo = (lo / 64.0).max(LAMBDA_MIN);
                    match self.classify(lo) {
                        (LambdaClass::BothFit, _) => {
                            self.warm_lambda = lo;
                            return true;
                        }
                        (LambdaClass::CertifiedInfeasible, _) => return false,
                        (LambdaClass::FedOver, _) => hi = lo,
                        (LambdaClass::MainOver, _) => break,
                    }
                }
            }
            (LambdaClass::MainOver, r) => {
                if r.is_finite() {
                    prev = Some((warm.ln(), r));
                }
                lo = warm;
                hi = warm;
                loop {
                    if hi >= LAMBDA_MAX {
                        return false; // main pool over even at maximal weight
                    }
                    hi = (hi * 64.0).min(LAMBDA_MAX);
                    match self.classify(hi) {
                        (LambdaClass::BothFit, _) => {
                            self.warm_lambda = hi;
                            return true;
                        }
                        (LambdaClass::CertifiedInfeasible, _) => return false,
                        (LambdaClass::MainOver, _) => lo = hi,
                        (LambdaClass::FedOver, _) => break,
                    }
                }
            }
        }
        // Invariant: main pool over at lo, fed pool over at hi. Secant steps
        // on the log balance ratio (when two evaluations are in hand and the
        // proposal lands inside the bracket) otherwise geometric bisection;
        // `last` carries the most recent evaluation into the secant.
        let mut last: Option<(f64, f64)> = prev;
        for _ in 0..200 {
            if hi - lo <= LAMBDA_WINDOW_TOL * hi {
                return false;
            }
            let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
            let width = ln_hi - ln_lo;
            let mut ln_next = 0.5 * (ln_lo + ln_hi);
            if let (Some((ln_a, r_a)), Some((ln_b, r_b))) = (prev, last) {
                if ln_a != ln_b && r_a != r_b {
                    let ln_sec = ln_b - r_b * (ln_b - ln_a) / (r_b - r_a);
                    if ln_sec > ln_lo + 0.02 * width && ln_sec < ln_hi - 0.02 * width {
                        ln_next = ln_sec;
                    }
                }
            }
            let mid = ln_next.exp();
            let (class, r) = self.classify(mid);
            if r.is_finite() {
                prev = last;
                last = Some((ln_next, r));
            }
            match class {
                LambdaClass::BothFit => {
                    self.warm_lambda = mid;
                    return true;
                }
                LambdaClass::CertifiedInfeasible => return false,
                LambdaClass::FedOver => hi = mid,
                LambdaClass::MainOver => lo = mid,
            }
        }
        false
    }

    /// Whether the latency target admits a feasible allocation; on success
    /// scratch holds the allocation.
    fn feasible(&mut self, t_total: f64) -> bool {
        self.set_budgets(t_total) && self.lambda_search()
    }

    fn snapshot(&self) -> Vec<UserScratch> {
        self.scratch.clone()
    }
}

/// Per-user split minimizing `b_fed + lambda * b_main` over the time budget:
/// root of the (monotone increasing) derivative of the convex objective. The
/// derivative tends to -inf and +inf at the interval ends, so a sign change
/// always exists strictly inside.
///
/// Secant steps inside a sign bracket do most of the work (warm-started from
/// the previous solve); if they stall, the remaining width falls back to
/// plain bisection. Every evaluation tightens the bracket either way.
#[inline]
fn split_user(user: &ReducedUser, sc: &mut UserScratch, m: f64, lambda: f64) {
    let (mut lo, mut hi) = (sc.lo, sc.hi);
    let tol = SPLIT_TOL * sc.q;
    let mut u_fed = if sc.u_fed > 0.0 { Some(sc.u_fed) } else { None };
    let mut u_main = if sc.u_main > 0.0 { Some(sc.u_main) } else { None };

    let mut eval = |t: f64, u_fed: &mut Option<f64>, u_main: &mut Option<f64>| -> f64 {
        let (_, slope_fed, uf) = user.fed.bandwidth_and_slope(t, *u_fed);
        let t_main = (sc.q - t) / m;
        let (_, slope_main, um) = user.main.bandwidth_and_slope(t_main, *u_main);
        if uf.is_finite() {
            *u_fed = Some(uf);
        }
        if um.is_finite() {
            *u_main = Some(um);
        }
        // d/dt of b_fed(t) + lambda * b_main((q-t)/m)
        slope_fed - lambda / m * slope_main
    };

    let mut x = if sc.t_fed > lo && sc.t_fed < hi {
        sc.t_fed
    } else {
        0.5 * (lo + hi)
    };
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..8 {
        let d = eval(x, &mut u_fed, &mut u_main);
        if d >= 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= tol {
            break;
        }
        let secant = match prev {
            Some((px, pd)) if pd != d => x - d * (x - px) / (d - pd),
            _ => f64::NAN,
        };
        prev = Some((x, d));
        if secant.is_finite() && secant > lo && secant < hi {
            if (secant - x).abs() <= 0.25 * tol {
                x = secant;
                lo = x - 0.5 * tol;
                hi = x + 0.5 * tol;
                break;
            }
            x = secant;
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    while hi - lo > tol {
        let t = 0.5 * (lo + hi);
        if eval(t, &mut u_fed, &mut u_main) >= 0.0 {
            hi = t;
        } else {
            lo = t;
        }
    }

    let t = (0.5 * (lo + hi)).clamp(sc.lo, sc.hi);
    let (b_fed, _, uf) = user.fed.bandwidth_and_slope(t, u_fed);
    let t_main = (sc.q - t) / m;
    let (b_main, _, um) = user.main.bandwidth_and_slope(t_main, u_main);
    sc.t_fed = t;
    sc.b_fed = b_fed;
    sc.b_main = b_main;
    if uf.is_finite() {
        sc.u_fed = uf;
    }
    if um.is_finite() {
        sc.u_main = um;
    }
}

/// Equal-bandwidth allocation evaluated in closed form: every user gets
/// `B/K` from each pool and transmits at the minimal feasible times.
pub(crate) fn equal_bandwidth_solution(
    red: &ReducedParams,
    eta: f64,
) -> Result<AllocationSolution> {
    let ctx = EtaContext::new(eta, &red.hyper)?;
    let k = red.users.len() as f64;
    let b_fed = red.bandwidth_fed_hz / k;
    let b_main = red.bandwidth_main_hz / k;
    let allocs: Vec<(f64, f64, f64, f64)> = red
        .users
        .iter()
        .map(|u| {
            let t_fed = red.payload_fed_bits / rate_raw(b_fed, u.fed.c);
            let t_main = red.payload_main_bits / rate_raw(b_main, u.main.c);
            (t_fed, t_main, b_fed, b_main)
        })
        .collect();
    Ok(assemble_solution(red, &ctx, &allocs))
}

fn assemble_solution(
    red: &ReducedParams,
    ctx: &EtaContext,
    allocs: &[(f64, f64, f64, f64)],
) -> AllocationSolution {
    let mut users = Vec::with_capacity(red.users.len());
    let mut latency: f64 = 0.0;
    let mut sum_b_fed = 0.0;
    let mut sum_b_main = 0.0;
    for (u, &(t_fed, t_main, b_fed, b_main)) in red.users.iter().zip(allocs) {
        let compute_client_s = u.compute_client_coeff * ctx.log2_inv;
        let compute_server_s = u.compute_server_coeff * ctx.log2_inv;
        let total_s = ctx.global_iters
            * (compute_client_s + compute_server_s + t_fed + ctx.local_iters * t_main);
        latency = latency.max(total_s);
        sum_b_fed += b_fed;
        sum_b_main += b_main;
        users.push(UserAllocation {
            user_id: u.user_id,
            t_fed,
            t_main,
            b_fed,
            b_main,
            breakdown: LatencyBreakdown {
                compute_client_s,
                compute_server_s,
                upload_fed_s: t_fed,
                upload_main_per_localiter_s: t_main,
                local_iters: ctx.local_iters,
                global_iters: ctx.global_iters,
                total_s,
            },
            residuals: [0.0; 3],
        });
    }
    let mut solution = AllocationSolution {
        eta: ctx.eta,
        split_ratio: red.split_ratio,
        latency_s: latency,
        users,
        sum_b_fed,
        sum_b_main,
        max_residual: 0.0,
        feasible: true,
    };
    let report = verify_optimality(&solution, red);
    for (ua, res) in solution.users.iter_mut().zip(report.per_user.iter()) {
        ua.residuals = *res;
    }
    solution.max_residual = report.max_residual;
    solution
}

/// Solve the fixed-accuracy subproblem.
///
/// The outer bisection runs between the rate-ceiling lower bound (no
/// bandwidth suffices below it) and the equal-bandwidth latency (always
/// feasible), to a relative width of 1e-9. At the returned allocation every
/// user's time budget is exhausted and every bandwidth is minimal for its
/// time, so the optimality residuals are tight by construction.
pub fn solve_subproblem(eta: f64, red: &ReducedParams) -> Result<AllocationSolution> {
    let mut solver = SubproblemSolver::new(eta, red)?;
    let ctx = solver.ctx;

    // Upper end: the equal-bandwidth allocation is always feasible.
    let eb = equal_bandwidth_solution(red, eta)?;
    let mut t_hi = eb.latency_s;
    let mut expansions = 0;
    while !solver.feasible(t_hi) {
        t_hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Solver(format!(
                "no feasible latency target found at eta={eta}"
            )));
        }
    }
    let mut best = solver.snapshot();

    // Lower end: below the rate-ceiling time floors no bandwidth helps.
    let mut t_lo = red
        .users
        .iter()
        .map(|u| {
            ctx.global_iters
                * (u.compute_coeff() * ctx.log2_inv
                    + u.fed.t_min
                    + ctx.local_iters * u.main.t_min)
        })
        .fold(0.0, f64::max);
    if !(t_lo < t_hi) {
        t_lo = t_hi * 0.5;
    }

    for _ in 0..300 {
        if t_hi - t_lo <= LATENCY_TOL * t_hi {
            break;
        }
        let mid = 0.5 * (t_lo + t_hi);
        if solver.feasible(mid) {
            t_hi = mid;
            best = solver.snapshot();
        } else {
            t_lo = mid;
        }
    }

    let allocs: Vec<(f64, f64, f64, f64)> = best
        .iter()
        .map(|sc| {
            let t_main = (sc.q - sc.t_fed) / ctx.local_iters;
            (sc.t_fed, t_main, sc.b_fed, sc.b_main)
        })
        .collect();
    Ok(assemble_solution(red, &ctx, &allocs))
}

/// Whether the latency target `t_total` is achievable at accuracy `eta`,
/// together with the allocation that certifies it.
pub fn feasible_at(
    t_total: f64,
    eta: f64,
    red: &ReducedParams,
) -> Result<(bool, Option<AllocationSolution>)> {
    if !(t_total > 0.0) {
        return Err(Error::Domain(format!(
            "latency target must be positive, got {t_total}"
        )));
    }
    let mut solver = SubproblemSolver::new(eta, red)?;
    if solver.feasible(t_total) {
        let ctx = solver.ctx;
        let allocs: Vec<(f64, f64, f64, f64)> = solver
            .scratch
            .iter()
            .map(|sc| {
                let t_main = (sc.q - sc.t_fed) / ctx.local_iters;
                (sc.t_fed, t_main, sc.b_fed, sc.b_main)
            })
            .collect();
        Ok((true, Some(assemble_solution(red, &ctx, &allocs))))
    } else {
        Ok((false, None))
    }
}

/// Split one user's per-round time budget between the two uploads,
/// minimizing `b_fed + lambda * b_main`, by ternary search to an
/// interval-relative tolerance of 1e-8.
///
/// `local_iters` weights the main upload in the budget identity
/// `t_fed + local_iters * t_main = budget`. Returns
/// `(t_fed, t_main, b_fed, b_main)`.
pub fn split_budget(
    budget_s: f64,
    lambda: f64,
    fed: &PoolLink,
    main: &PoolLink,
    local_iters: f64,
) -> Result<(f64, f64, f64, f64)> {
    if !(budget_s > 0.0) || !(lambda >= 0.0) || !(local_iters > 0.0) {
        return Err(Error::Domain(format!(
            "split_budget needs budget > 0, lambda >= 0, local_iters > 0 \
             (got {budget_s}, {lambda}, {local_iters})"
        )));
    }
    let lo0 = fed.t_min;
    let hi0 = budget_s - local_iters * main.t_min;
    let width = hi0 - lo0;
    if !(width > 0.0) {
        return Err(Error::Solver(format!(
            "budget {budget_s}s cannot cover both rate-ceiling time floors \
             ({} and {local_iters} x {})",
            fed.t_min, main.t_min
        )));
    }
    let margin = 1e-12 * width;
    let mut lo = lo0 + margin;
    let mut hi = hi0 - margin;
    // With lambda = 0 the main bandwidth still tie-breaks at machine scale,
    // otherwise the flat objective would stall at an arbitrary point.
    let lambda_eff = lambda.max(1e-300);
    let phi = |t: f64| {
        fed.min_bandwidth_for_time(t)
            + lambda_eff * main.min_bandwidth_for_time((budget_s - t) / local_iters)
    };
    while hi - lo > SPLIT_TOL * width {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if phi(m1) <= phi(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_fed = 0.5 * (lo + hi);
    let t_main = (budget_s - t_fed) / local_iters;
    Ok((
        t_fed,
        t_main,
        fed.min_bandwidth_for_time(t_fed),
        main.min_bandwidth_for_time(t_main),
    ))
}

/// Sweep the local accuracy over the grid and return the best allocation
/// plus the whole sweep. When the fixed-split reduction does not apply, the
/// split ratio is swept jointly with the accuracy on a 0.05 grid and each
/// sweep entry reports the best latency over split ratios.
pub fn optimize(scenario: &Scenario, eta_step: f64) -> Result<OptimizeOutcome> {
    if !(eta_step > 0.0 && eta_step < 1.0) {
        return Err(Error::Domain(format!(
            "eta step must lie in (0, 1), got {eta_step}"
        )));
    }
    let grid = eta_grid(eta_step);
    match reduce(scenario) {
        Ok(red) => {
            let solutions = map_collect(&grid, |&eta| solve_subproblem(eta, &red));
            pick_outcome(solutions)
        }
        Err(Error::ReductionInvalid(_)) => {
            let mut ratios = Vec::new();
            let mut a = scenario.compute.a_min;
            while a < scenario.compute.a_max + SPLIT_RATIO_FALLBACK_STEP / 2.0 {
                ratios.push(a.min(scenario.compute.a_max));
                a += SPLIT_RATIO_FALLBACK_STEP;
            }
            let reduced: Vec<ReducedParams> = ratios
                .iter()
                .map(|&a| reduce_with_split_ratio(scenario, a))
                .collect::<Result<_>>()?;
            let solutions = map_collect(&grid, |&eta| -> Result<AllocationSolution> {
                let mut best: Option<AllocationSolution> = None;
                for red in &reduced {
                    let sol = solve_subproblem(eta, red)?;
                    if best.as_ref().is_none_or(|b| sol.latency_s < b.latency_s) {
                        best = Some(sol);
                    }
                }
                Ok(best.expect("split grid is non-empty"))
            });
            pick_outcome(solutions)
        }
        Err(e) => Err(e),
    }
}

/// Ordered fold over the sweep: minimal latency wins, ties go to the entry
/// that appears first (the smaller accuracy).
fn pick_outcome(solutions: Vec<Result<AllocationSolution>>) -> Result<OptimizeOutcome> {
    let mut best: Option<AllocationSolution> = None;
    let mut sweep = Vec::with_capacity(solutions.len());
    for sol in solutions {
        let sol = sol?;
        sweep.push(EtaPoint {
            eta: sol.eta,
            latency_s: sol.latency_s,
        });
        if best.as_ref().is_none_or(|b| sol.latency_s < b.latency_s) {
            best = Some(sol);
        }
    }
    let best = best.ok_or_else(|| Error::Solver("empty accuracy grid".into()))?;
    Ok(OptimizeOutcome { best, sweep })
}

/// Run one reference strategy.
///
/// - EB fixes equal bandwidth shares and sweeps the local accuracy on the
///   same grid as [`optimize`] (so the comparison isolates bandwidth
///   optimization).
/// - FE fixes the local accuracy at 0.1 and optimizes the allocation.
/// - BA fixes both.
pub fn baseline(strategy: Strategy, scenario: &Scenario, eta_step: f64) -> Result<StrategyResult> {
    let started = Instant::now();
    let red = reduce(scenario)?;
    let solution = match strategy {
        Strategy::Proposed => {
            return Err(Error::Domain(
                "PROPOSED is run via optimize(), not baseline()".into(),
            ))
        }
        Strategy::Eb => {
            let grid = eta_grid(eta_step);
            let mut best: Option<AllocationSolution> = None;
            for &eta in &grid {
                let sol = equal_bandwidth_solution(&red, eta)?;
                if best.as_ref().is_none_or(|b| sol.latency_s < b.latency_s) {
                    best = Some(sol);
                }
            }
            best.ok_or_else(|| Error::Solver("empty accuracy grid".into()))?
        }
        Strategy::Fe => solve_subproblem(ETA_FIXED_BASELINE, &red)?,
        Strategy::Ba => equal_bandwidth_solution(&red, ETA_FIXED_BASELINE)?,
    };
    Ok(StrategyResult {
        strategy,
        operating_point: None,
        solution,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Optimality-condition residuals of an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// Per user: time-budget equality, main-pool rate equality, fed-pool
    /// rate equality (all relative).
    pub per_user: Vec<[f64; 3]>,
    pub max_residual: f64,
}

/// Recompute, from first principles, how far an allocation sits from the
/// optimality conditions: each user's uploads exhaust its per-round time
/// budget, and each bandwidth is exactly the minimal one for its time (rate
/// equalities). Solver outputs satisfy all three tightly; the reference
/// strategies generally violate the budget equality.
pub fn verify_optimality(solution: &AllocationSolution, red: &ReducedParams) -> OptimalityReport {
    let a = iteration_constant_a(&red.hyper);
    let v = local_iter_coeff_v(&red.hyper).expect("hyperparams validated at construction");
    let log2_inv = (1.0 / solution.eta).log2();
    let m = v * log2_inv;
    let t = solution.latency_s;
    let mut per_user = Vec::with_capacity(solution.users.len());
    let mut max_residual: f64 = 0.0;
    for (ru, ua) in red.users.iter().zip(solution.users.iter()) {
        let budget = (1.0 - solution.eta) * t / a - ru.compute_coeff() * log2_inv;
        let res_budget =
            (ua.t_fed + m * ua.t_main - budget).abs() / budget.abs().max(f64::MIN_POSITIVE);
        let demand_main = red.payload_main_bits / ua.t_main;
        let res_main = (demand_main - rate_raw(ua.b_main, ru.main.c)).abs() / demand_main;
        let demand_fed = red.payload_fed_bits / ua.t_fed;
        let res_fed = (demand_fed - rate_raw(ua.b_fed, ru.fed.c)).abs() / demand_fed;
        max_residual = max_residual.max(res_budget).max(res_main).max(res_fed);
        per_user.push([res_budget, res_main, res_fed]);
    }
    OptimalityReport {
        per_user,
        max_residual,
    }
}

#[cfg(test)]
mod tests;
