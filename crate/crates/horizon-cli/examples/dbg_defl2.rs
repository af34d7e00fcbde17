use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::{MarketModel, RandomTimeSpec};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 30000;
    cfg.table_paths = 30000;
    let bm = MarketModel::brownian(1.0).unwrap();
    let t0 = std::time::Instant::now();
    let reps = run_brownian_maturity(&cfg, &bm, 0.5).unwrap();
    println!("maturity n=30000 took {:?}", t0.elapsed());
    for r in &reps {
        println!("{:?} {} est={:.4e} exc={:?} d={:?}", r.verdict, r.name, r.estimate, r.exclusions,
            r.details.iter().filter(|(k,_)| k.contains("worst")||k.contains("violation")||k.contains("min_")).collect::<Vec<_>>());
    }
    let t0 = std::time::Instant::now();
    let reps = run_emery(&cfg, &bm).unwrap();
    println!("emery n=30000 took {:?}", t0.elapsed());
    for r in &reps {
        println!("{:?} {} est={:.4e} d={:?}", r.verdict, r.name, r.estimate,
            r.details.iter().filter(|(k,_)| k.contains("worst")||k.contains("seed")||k.contains("min_")).collect::<Vec<_>>());
    }
    let pm5 = MarketModel::poisson(1.0, 0.5).unwrap();
    let reps = run_jump_kind(&cfg, &pm5, RandomTimeSpec::MinScaledJumps{scale:0.5}).unwrap();
    for r in reps.iter().filter(|r| r.name.contains("deflator")) {
        println!("{:?} {} worst_z={:?}", r.verdict, r.name, r.details.get("worst_pair_z"));
    }
}
