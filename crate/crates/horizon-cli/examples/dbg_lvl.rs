use horizon_core::azema::AzemaBundle;
use horizon_core::deflator::poisson_deflator_before;
use horizon_core::path::{effective_horizon, simulate_poisson};
use horizon_core::ruin::RuinProbTable;
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::poisson(1.0, 1.0).unwrap();
    let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 };
    let ruin = RuinProbTable::new(model.theta()).unwrap();
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    let times: Vec<f64> = vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, t_max];
    let n = 40000u64;
    let mut sums = vec![0.0; times.len()];
    let mut sums_l = vec![0.0; times.len()];
    let mut sums_sq = vec![0.0; times.len()];
    let mut m_sum = vec![0.0; times.len()];
    let mut used = 0;
    for i in 0..n {
        let p = simulate_poisson(&model, t_max, 42, i).unwrap();
        let sp = SamplePath::Poisson(p.clone());
        let r = realize(&spec, &sp).unwrap();
        if !r.detected { continue; }
        let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
        let run = poisson_deflator_before(&bundle, &p, r.tau, &times).unwrap();
        used += 1;
        for k in 0..times.len() {
            sums[k] += run.deflated[k];
            sums_l[k] += run.l[k];
            sums_sq[k] += run.deflated[k] * run.deflated[k];
            m_sum[k] += bundle.m(&sp, times[k].min(p.horizon)).unwrap().v;
        }
    }
    println!("used {used}");
    for k in 0..times.len() {
        let mean = sums[k] / used as f64;
        let se = ((sums_sq[k] / used as f64 - mean * mean) / used as f64).sqrt();
        println!("t={:7.3}  E[L*S^tau]={:.5} (se {:.5})  E[L]={:.5}  E[m]={:.5}",
            times[k], mean, se, sums_l[k] / used as f64, m_sum[k] / used as f64);
    }
}
