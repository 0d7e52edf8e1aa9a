use fedsplit_core::optimizer::{baseline, optimize, Strategy};
use fedsplit_core::scenario::{generate_scenario, SimConfig};

fn mean_improvement(cfg: &SimConfig, powers: &[f64], seeds: u32) -> f64 {
    let seed_list: Vec<u64> = (cfg.seed..cfg.seed + seeds as u64).collect();
    let mut imps = Vec::new();
    for &p in powers {
        let mut tp = 0.0;
        let mut tb = 0.0;
        for &seed in &seed_list {
            let s = generate_scenario(cfg, seed).unwrap().with_p_max_dbm(p);
            tp += optimize(&s, 0.01).unwrap().best.latency_s;
            tb += baseline(Strategy::Ba, &s, 0.01).unwrap().solution.latency_s;
        }
        imps.push(100.0 * (tb - tp) / tb);
    }
    imps.iter().sum::<f64>() / imps.len() as f64
}

fn main() {
    let powers = [0.0, 10.0, 20.0]; // coarse probe of the sweep
    for (l, g) in [(4.0, 2.0), (4.0, 4.0), (6.0, 6.0), (10.0, 10.0), (16.0, 16.0)] {
        let cfg = SimConfig {
            lipschitz: l,
            gamma: g,
            ..Default::default()
        };
        let v = 2.0 / ((2.0 - l * 0.1) * 0.1 * g);
        println!(
            "L={l:4} gamma={g:4} (v={v:.2}, m(0.1)={:.1}): mean imp vs BA ~= {:.2}%",
            v * 10f64.log2(),
            mean_improvement(&cfg, &powers, 2)
        );
    }
}
