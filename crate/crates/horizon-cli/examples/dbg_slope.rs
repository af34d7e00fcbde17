use horizon_core::path::{effective_horizon, simulate_brownian};
use horizon_core::strategy::*;
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::brownian(1.0).unwrap();
    let level = 0.5;
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    println!("t_max {t_max:.2}");
    for &(dt, n) in &[(1.0/256.0, 4000u64), (1.0/1024.0, 4000), (1.0/4096.0, 4000)] {
        let mut sum_abs = 0.0; let mut sum = 0.0; let mut sumsq = 0.0; let mut m = 0;
        let mut sum_z = 0.0; let mut sum_elld = 0.0; let mut sum_ello = 0.0; let mut sum_v = 0.0;
        for i in 0..n {
            let p = simulate_brownian(&model, t_max, dt, 777, i).unwrap();
            let r = realize(&spec, &SamplePath::Brownian(p.clone())).unwrap();
            if !r.detected { continue; }
            let i_tau = (r.tau / dt).round() as usize;
            let z = (p.s(i_tau) / level).min(1.0);
            let (v, _) = brownian_level_wealth(&p, level, i_tau);
            let elld = estimate_local_time_downcrossings(&p, level, i_tau);
            let ello = estimate_local_time_occupation(&p, level, i_tau);
            let res = 1.0 + v - z - elld / (2.0 * level);
            sum_abs += res.abs(); sum += res; sumsq += res * res; m += 1;
            sum_z += 1.0 - z; sum_elld += elld; sum_ello += ello; sum_v += v;
        }
        let mf = m as f64;
        println!("dt=2^{:.0} n={m}: E|R|={:.5} |E R|={:.5} sd={:.5} E[1-Z]={:.5} E[elld]={:.4} E[ello]={:.4} E[V]={:.4}",
            dt.log2(), sum_abs/mf, (sum/mf).abs(), (sumsq/mf - (sum/mf).powi(2)).sqrt(),
            sum_z/mf, sum_elld/mf, sum_ello/mf, sum_v/mf);
    }
}
