use fedsplit_core::optimizer::{baseline, optimize, reduce, solve_subproblem, Strategy};
use fedsplit_core::scenario::{generate_scenario, SimConfig};
use std::time::Instant;

fn main() {
    let cfg = SimConfig::default();
    let s = generate_scenario(&cfg, 7).unwrap();
    let red = reduce(&s).unwrap();

    let t0 = Instant::now();
    let sol = solve_subproblem(0.5, &red).unwrap();
    println!("single subproblem (K=50): {:?}  T={:.2}s residual={:.2e} sum_bf={:.6e} sum_bm={:.6e}",
        t0.elapsed(), sol.latency_s, sol.max_residual, sol.sum_b_fed, sol.sum_b_main);

    let t0 = Instant::now();
    let out = optimize(&s, 0.01).unwrap();
    println!("full eta sweep (99 pts): {:?}  best T={:.2}s at eta={}", t0.elapsed(), out.best.latency_s, out.best.eta);

    let t0 = Instant::now();
    let eb = baseline(Strategy::Eb, &s, 0.01).unwrap();
    let fe = baseline(Strategy::Fe, &s, 0.01).unwrap();
    let ba = baseline(Strategy::Ba, &s, 0.01).unwrap();
    println!("baselines: {:?}  EB={:.2} (eta={}) FE={:.2} BA={:.2}",
        t0.elapsed(), eb.solution.latency_s, eb.solution.eta, fe.solution.latency_s, ba.solution.latency_s);
    println!("improvement vs BA: {:.2}%", 100.0*(ba.solution.latency_s - out.best.latency_s)/ba.solution.latency_s);
    println!("improvement vs EB: {:.2}%", 100.0*(eb.solution.latency_s - out.best.latency_s)/eb.solution.latency_s);
    println!("improvement vs FE: {:.2}%", 100.0*(fe.solution.latency_s - out.best.latency_s)/fe.solution.latency_s);
}
