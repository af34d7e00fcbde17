use horizon_core::path::{effective_horizon, simulate_brownian};
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::brownian(1.0).unwrap();
    let level: f64 = 0.5;
    let ln_a = level.ln();
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    let dt = 1.0 / 1024.0;
    let sigma = 1.0;
    let times = [5.0, 15.0, 30.0, 60.0];
    let n = 30000u64;
    let mut l_sum = vec![0.0; times.len()];
    let mut ls_sum = vec![0.0; times.len()];
    let mut l_unstopped = vec![0.0; times.len()];
    let mut m = 0;
    for i in 0..n {
        let p = simulate_brownian(&model, t_max, dt, 777, i).unwrap();
        let r = realize(&spec, &SamplePath::Brownian(p.clone())).unwrap();
        if !r.detected { continue; }
        m += 1;
        let i_tau = (r.tau / dt).round() as usize;
        let mut ln_l = 0.0;
        let mut k = 0;
        for j in 0..p.n_steps() {
            while k < times.len() && (times[k]/dt).round() as usize == j {
                // frozen L at t^tau, but also record unstopped variant
                k += 1;
            }
            if k >= times.len() { break; }
            let idx_t = (times[k]/dt).round() as usize;
            let _ = idx_t;
            if j < i_tau && p.ln_s[j] < ln_a {
                ln_l += -sigma * p.dw[j] + 0.5 * sigma * sigma * dt;
            }
            // snapshot when hitting each time index
            for (kk, &t) in times.iter().enumerate() {
                if (t/dt).round() as usize == j + 1 {
                    let lv = ln_l.exp();
                    l_sum[kk] += lv;
                    ls_sum[kk] += lv * p.s((j + 1).min(i_tau));
                    l_unstopped[kk] += lv;
                }
            }
        }
    }
    println!("used {m}");
    for k in 0..times.len() {
        println!("t={:5.1} E[L]={:.4} E[L*S^tau]={:.4}", times[k], l_sum[k]/m as f64, ls_sum[k]/m as f64);
    }
}
