use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::{MarketModel, RandomTimeSpec};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 4000;
    cfg.table_paths = 20000;
    let t0 = std::time::Instant::now();
    let pm = MarketModel::poisson(1.0, 1.0).unwrap();
    let reps = run_poisson_level(&cfg, &pm, 0.5).unwrap();
    println!("— poisson_level ({:?})", t0.elapsed());
    for r in &reps { println!("  {:?} {} est={:.4e} se={:.1e} used={} exc={} details={:?}", r.verdict, r.name, r.estimate, r.std_error, r.n_used, r.n_excluded, r.details); }

    let pm5 = MarketModel::poisson(1.0, 0.5).unwrap();
    for spec in [RandomTimeSpec::ConvexComboJumps{k1:0.5,k2:0.5}, RandomTimeSpec::MinScaledJumps{scale:0.5}, RandomTimeSpec::MaxScaledJumps{scale:0.5}] {
        let t0 = std::time::Instant::now();
        let reps = run_jump_kind(&cfg, &pm5, spec).unwrap();
        println!("— {:?} ({:?})", spec, t0.elapsed());
        for r in &reps { println!("  {:?} {} est={:.4e} used={} exc={:?} min_w={:?}", r.verdict, r.name, r.estimate, r.n_used, r.exclusions, r.min_wealth); }
    }
}
