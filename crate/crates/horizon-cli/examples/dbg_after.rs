use horizon_core::azema::AzemaBundle;
use horizon_core::deflator::poisson_deflator_after;
use horizon_core::path::{effective_horizon, simulate_poisson};
use horizon_core::ruin::RuinProbTable;
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

fn main() {
    let model = MarketModel::poisson(1.0, 1.0).unwrap();
    let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 };
    let ruin = RuinProbTable::new(model.theta()).unwrap();
    let t_max = effective_horizon(&model, &spec, 1e-4).unwrap();
    println!("t_max = {t_max}");
    let times: Vec<f64> = (1..=5).map(|k| t_max * k as f64 / 5.0).collect();
    let mut nan_count = 0;
    let mut sums = vec![0.0; times.len()];
    let mut n = 0;
    for i in 0..2000u64 {
        let p = simulate_poisson(&model, t_max, 42, i).unwrap();
        let sp = SamplePath::Poisson(p.clone());
        let r = realize(&spec, &sp).unwrap();
        if !r.detected { continue; }
        let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
        let run = poisson_deflator_after(&bundle, &p, r.tau, &times).unwrap();
        if run.l.iter().any(|x| !x.is_finite()) {
            nan_count += 1;
            if nan_count <= 2 {
                println!("NaN path {i}: tau={} l={:?}", r.tau, run.l);
                println!("  jumps after tau: {:?}", p.jumps.iter().filter(|&&x| x > r.tau).take(4).collect::<Vec<_>>());
                let tj = *p.jumps.iter().find(|&&x| x > r.tau).unwrap();
                let y_pre = p.y_pre(tj);
                let a = bundle.y_level();
                println!("  first jump at {tj}: y_pre - a = {}", y_pre - a);
            }
            continue;
        }
        n += 1;
        for (k, d) in run.deflated.iter().enumerate() { sums[k] += d; }
    }
    println!("nan paths: {nan_count}, used {n}");
    println!("E[L(S-S^tau)] at times: {:?}", sums.iter().map(|s| s / n as f64).collect::<Vec<_>>());
}
