use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::MarketModel;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 10000;
    cfg.table_paths = 50000;
    let pm = MarketModel::poisson(1.0, 0.5).unwrap();
    for unit in [true, false] {
        let t0 = std::time::Instant::now();
        let reps = run_poisson_sup(&cfg, &pm, unit).unwrap();
        println!("— sup unit={unit} took {:?}", t0.elapsed());
        for r in &reps {
            println!("  {:?} {} est={:.3e} exc={:?} d={:?}", r.verdict, r.name, r.estimate, r.exclusions,
                r.details.iter().filter(|(k,_)| k.contains("viol")||k.contains("breach")||k.contains("ulp")).collect::<Vec<_>>());
        }
    }
    // negative psi variants
    let pm_neg = MarketModel::poisson(1.0, -0.5).unwrap();
    for unit in [true, false] {
        let t0 = std::time::Instant::now();
        let reps = run_poisson_sup(&cfg, &pm_neg, unit).unwrap();
        println!("— sup psi<0 unit={unit} took {:?}", t0.elapsed());
        for r in &reps {
            println!("  {:?} {} est={:.3e} exc={:?} d={:?}", r.verdict, r.name, r.estimate, r.exclusions,
                r.details.iter().filter(|(k,_)| k.contains("viol")||k.contains("breach")||k.contains("ulp")).collect::<Vec<_>>());
        }
    }
}
