use horizon_core::path::{effective_horizon, simulate_brownian};
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::brownian(1.0).unwrap();
    let level: f64 = 0.5;
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    let dt = 1.0 / 1024.0;
    let sigma = 1.0;
    let times = [5.0, 15.0, 30.0, 60.0];
    let n = 30000u64;
    let mut w_stopped = vec![0.0; times.len()];
    let mut comp = vec![0.0; times.len()];
    let mut m = 0;
    for i in 0..n {
        let p = simulate_brownian(&model, t_max, dt, 4242, i).unwrap();
        let r = realize(&spec, &SamplePath::Brownian(p.clone())).unwrap();
        if !r.detected { continue; }
        m += 1;
        let i_tau = (r.tau / dt).round() as usize;
        for (k, &t) in times.iter().enumerate() {
            let idx = ((t / dt).round() as usize).min(p.n_steps()).min(i_tau);
            w_stopped[k] += p.w(idx);
            let mut occ = 0.0;
            for j in 0..idx {
                if p.ln_s[j] < level.ln() { occ += dt; }
            }
            comp[k] += sigma * occ;
        }
    }
    println!("n used {m}");
    for k in 0..times.len() {
        println!("t={:5.1}  E[W_(t^tau)]={:+.4}  sigma*E[occ]={:+.4}  E[What]={:+.4}",
            times[k], w_stopped[k]/m as f64, comp[k]/m as f64, (w_stopped[k]-comp[k])/m as f64);
    }
}
