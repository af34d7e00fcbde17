use horizon_core::azema::AzemaBundle;
use horizon_core::path::{effective_horizon, simulate_brownian};
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::brownian(1.0).unwrap();
    let level = 0.5;
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    let dt = 1.0 / 1024.0;
    let bundle = AzemaBundle::new(spec, model);
    let times: Vec<f64> = (1..=5).map(|k| t_max * k as f64 / 5.0).collect();
    let n = 20000u64;
    let mut s_grid = vec![0.0; times.len()];
    let mut s_exact = vec![0.0; times.len()];
    let mut m = 0;
    for i in 0..n {
        let p = simulate_brownian(&model, t_max, dt, 42, i).unwrap();
        let r = realize(&spec, &SamplePath::Brownian(p.clone())).unwrap();
        if !r.detected { continue; }
        let i_tau = (r.tau / dt).round() as usize;
        let idxs: Vec<usize> = times.iter().map(|t| ((t/dt).round() as usize).min(p.n_steps())).collect();
        let run = horizon_core::deflator::brownian_deflator_before(&bundle, &p, i_tau, &idxs).unwrap();
        m += 1;
        for k in 0..times.len() {
            s_grid[k] += run.deflated[k];
            // freeze at the exact level when the sample time is past tau
            let dfl = if idxs[k] >= i_tau { run.l[k] * level } else { run.deflated[k] };
            s_exact[k] += dfl;
        }
    }
    println!("n={m}");
    println!("E[L*S^tau] grid-frozen:  {:?}", s_grid.iter().map(|x| x / m as f64).collect::<Vec<_>>());
    println!("E[L*S^tau] level-frozen: {:?}", s_exact.iter().map(|x| x / m as f64).collect::<Vec<_>>());
}
