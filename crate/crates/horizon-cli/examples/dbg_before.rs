use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::{MarketModel, RandomTimeSpec};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 30000;
    cfg.table_paths = 20000;
    let pm5 = MarketModel::poisson(1.0, 0.5).unwrap();
    let reps = run_jump_kind(&cfg, &pm5, RandomTimeSpec::ConvexComboJumps{k1:0.5,k2:0.5}).unwrap();
    for r in reps.iter().filter(|r| r.name.contains("deflator")) {
        println!("{:?} {} worst_z={:?}", r.verdict, r.name, r.details.get("worst_pair_z"));
    }
    let t0 = std::time::Instant::now();
    let pm = MarketModel::poisson(1.0, 1.0).unwrap();
    let reps = run_poisson_level(&cfg, &pm, 0.5).unwrap();
    println!("poisson_level at n=30000 took {:?}", t0.elapsed());
    for r in &reps {
        println!("{:?} {} est={:.4e} details={:?}", r.verdict, r.name, r.estimate,
            r.details.iter().filter(|(k,_)| k.contains("worst")||k.contains("max_")||k.contains("min_")).collect::<Vec<_>>());
    }
}
