//! Deterministic scenario generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::scenario::{channel_gain_floored, Scenario, SimConfig, UserProfile};

/// Generate a system instance from a validated config and a seed.
///
/// Users are placed i.i.d. uniform in the square cell around the base
/// station; per-user cycle costs are uniform in the configured range; shadow
/// terms are drawn once per link (fed and main independently), i.e. block
/// fading over the whole run. Samples are split evenly, with the remainder
/// going to the first `total % K` users. The per-user draw order is fixed
/// (x, y, cycles, fed shadow, main shadow), so output is a pure function of
/// `(config, seed)`.
pub fn generate_scenario(config: &SimConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shadow = Normal::new(0.0, config.shadow_sigma_db).expect("sigma validated positive");

    let k = config.users as u64;
    let half = config.cell_side_m / 2.0;
    let [cyc_lo, cyc_hi] = config.cycles_per_sample_range;
    let base_samples = config.total_samples / k;
    let remainder = config.total_samples % k;
    let p_fed = config.p_fed_w();
    let p_main = config.p_main_w();
    let f_max_hz = config.f_max_user_ghz * 1e9;

    let mut users = Vec::with_capacity(config.users as usize);
    for id in 0..config.users {
        let x = rng.gen_range(-half..=half);
        let y = rng.gen_range(-half..=half);
        let cycles = if cyc_lo == cyc_hi {
            cyc_lo
        } else {
            rng.gen_range(cyc_lo..=cyc_hi)
        };
        let shadow_fed = shadow.sample(&mut rng);
        let shadow_main = shadow.sample(&mut rng);

        // Distance floor of 1 mm keeps the path-loss log finite if a user
        // lands exactly on the base station.
        let d_km = ((x * x + y * y).sqrt() / 1000.0).max(1e-9);
        let gain_fed =
            channel_gain_floored(d_km, shadow_fed, config.gain_floor)?.min(1.0);
        let gain_main =
            channel_gain_floored(d_km, shadow_main, config.gain_floor)?.min(1.0);

        users.push(UserProfile {
            user_id: id,
            position_m: [x, y],
            gain_fed,
            gain_main,
            p_max_fed_w: p_fed,
            p_max_main_w: p_main,
            f_max_hz,
            cycles_per_sample: cycles,
            num_samples: base_samples + u64::from((id as u64) < remainder),
        });
    }

    let scenario = Scenario {
        radio: config.radio_params(),
        compute: config.compute_profile(),
        users,
        learn: config.hyper()?,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
