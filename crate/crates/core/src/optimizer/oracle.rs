//! Brute-force reference solver for small instances.
//!
//! Used to certify the structured solver on scenarios with up to three
//! users: per user, the time budget at a candidate latency is gridded
//! densely (the budget equality makes the split one-dimensional), each grid
//! point is converted to exact minimum bandwidths by an independent plain
//! bisection, and pool feasibility is checked exhaustively over all grid
//! combinations. The latency itself is bisected on top.
//!
//! Deliberately shares nothing with the structured solver's machinery: no
//! pool-weight decomposition, no derivative-based splits, and its own
//! bandwidth inversion.

use crate::error::{Error, Result};
use crate::optimizer::{ReducedParams, ReducedUser};
use crate::rate::rate_raw;

/// Default grid density per user.
pub const DEFAULT_GRID: usize = 400;

/// Brute-force minimum worst-user latency at a fixed local accuracy.
///
/// Restricted to three users at most; the K=3 pool check enumerates all
/// grid pairs of the first two users and binary-searches the third's
/// monotone bandwidth frontier.
pub fn oracle_min_latency(eta: f64, red: &ReducedParams, grid: usize) -> Result<f64> {
    if red.users.len() > 3 {
        return Err(Error::Domain(format!(
            "oracle supports at most 3 users, got {}",
            red.users.len()
        )));
    }
    if grid < 2 {
        return Err(Error::Domain("oracle grid must have at least 2 points".into()));
    }
    let a = crate::delay::iteration_constant_a(&red.hyper);
    let v = crate::delay::local_iter_coeff_v(&red.hyper)?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0,1), got {eta}")));
    }
    let log2_inv = (1.0 / eta).log2();
    let m = v * log2_inv;
    let global_iters = a / (1.0 - eta);

    // Equal bandwidth gives a feasible upper end.
    let k = red.users.len() as f64;
    let t_hi0 = red
        .users
        .iter()
        .map(|u| {
            let t_fed = red.payload_fed_bits / rate_raw(red.bandwidth_fed_hz / k, u.fed.c);
            let t_main = red.payload_main_bits / rate_raw(red.bandwidth_main_hz / k, u.main.c);
            global_iters * (u.compute_coeff() * log2_inv + t_fed + m * t_main)
        })
        .fold(0.0, f64::max);
    let t_lo0 = red
        .users
        .iter()
        .map(|u| {
            global_iters * (u.compute_coeff() * log2_inv + u.fed.t_min + m * u.main.t_min)
        })
        .fold(0.0, f64::max);

    let mut t_hi = t_hi0;
    let mut expansions = 0;
    while !feasible_on_grid(red, t_hi, log2_inv, m, global_iters, grid) {
        t_hi *= 2.0;
        expansions += 1;
        if expansions > 100 {
            return Err(Error::Solver("oracle found no feasible latency".into()));
        }
    }
    let mut t_lo = t_lo0.min(t_hi * 0.5);
    for _ in 0..200 {
        if t_hi - t_lo <= 1e-7 * t_hi {
            break;
        }
        let mid = 0.5 * (t_lo + t_hi);
        if feasible_on_grid(red, mid, log2_inv, m, global_iters, grid) {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    Ok(t_hi)
}

/// Per-user candidate splits: bandwidth pairs sorted by rising fed time
/// (falling fed bandwidth, rising main bandwidth... the main time falls as
/// the fed time takes more of the budget, so the main bandwidth rises).
fn candidate_splits(
    user: &ReducedUser,
    budget: f64,
    m: f64,
    payload_fed: f64,
    payload_main: f64,
    grid: usize,
) -> Option<Vec<(f64, f64)>> {
    let lo0 = user.fed.t_min;
    let hi0 = budget - m * user.main.t_min;
    let width = hi0 - lo0;
    if !(budget > 0.0) || !(width > 0.0) {
        return None;
    }
    let margin = 1e-9 * width;
    let lo = lo0 + margin;
    let hi = hi0 - margin;
    let mut out = Vec::with_capacity(grid);
    for i in 0..grid {
        let t_fed = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
        let t_main = (budget - t_fed) / m;
        let b_fed = invert_rate(payload_fed / t_fed, user.fed.c);
        let b_main = invert_rate(payload_main / t_main, user.main.c);
        out.push((b_fed, b_main));
    }
    Some(out)
}

fn feasible_on_grid(
    red: &ReducedParams,
    t_total: f64,
    log2_inv: f64,
    m: f64,
    global_iters: f64,
    grid: usize,
) -> bool {
    let mut lists = Vec::with_capacity(red.users.len());
    for u in &red.users {
        let budget = t_total / global_iters - u.compute_coeff() * log2_inv;
        match candidate_splits(u, budget, m, red.payload_fed_bits, red.payload_main_bits, grid) {
            Some(list) => lists.push(list),
            None => return false,
        }
    }
    let (b_fed_cap, b_main_cap) = (red.bandwidth_fed_hz, red.bandwidth_main_hz);
    match lists.len() {
        1 => lists[0]
            .iter()
            .any(|&(bf, bm)| bf <= b_fed_cap && bm <= b_main_cap),
        2 => lists[0].iter().any(|&(bf0, bm0)| {
            bf0 <= b_fed_cap
                && bm0 <= b_main_cap
                && third_fits(&lists[1], b_fed_cap - bf0, b_main_cap - bm0)
        }),
        3 => lists[0].iter().any(|&(bf0, bm0)| {
            if bf0 > b_fed_cap || bm0 > b_main_cap {
                return false;
            }
            lists[1].iter().any(|&(bf1, bm1)| {
                let rem_f = b_fed_cap - bf0 - bf1;
                let rem_m = b_main_cap - bm0 - bm1;
                rem_f > 0.0 && rem_m > 0.0 && third_fits(&lists[2], rem_f, rem_m)
            })
        }),
        _ => unreachable!("user count checked on entry"),
    }
}

/// Whether some candidate fits in the remaining pool room. Candidates are
/// ordered by decreasing fed bandwidth and increasing main bandwidth, so the
/// best main bandwidth among those with `b_fed <= rem_fed` sits at the first
/// such index: binary search it.
fn third_fits(candidates: &[(f64, f64)], rem_fed: f64, rem_main: f64) -> bool {
    let idx = candidates.partition_point(|&(bf, _)| bf > rem_fed);
    idx < candidates.len() && candidates[idx].1 <= rem_main
}

/// Plain-bisection bandwidth inversion: the smallest `b` with
/// `b log2(1 + c/b) >= demand`, or infinity past the rate ceiling.
fn invert_rate(demand: f64, c: f64) -> f64 {
    let ceiling = c / std::f64::consts::LN_2;
    if demand >= ceiling * (1.0 - 1e-12) {
        return f64::INFINITY;
    }
    let mut hi = demand.max(1e-300);
    while rate_raw(hi, c) < demand {
        hi *= 2.0;
    }
    let mut lo = hi * 0.5;
    while rate_raw(lo, c) >= demand {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            break;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rate_raw(mid, c) >= demand {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
