use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::MarketModel;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 30000;
    cfg.table_paths = 30000;
    let bm = MarketModel::brownian(1.0).unwrap();
    let reps = run_emery(&cfg, &bm).unwrap();
    for r in &reps {
        println!("{:?} {} est={:.4e} d={:?}", r.verdict, r.name, r.estimate,
            r.details.iter().filter(|(k,_)| k.contains("worst")||k.contains("z_score")||k.contains("min_")).collect::<Vec<_>>());
    }
    let reps = run_brownian_maturity(&cfg, &bm, 0.5).unwrap();
    for r in &reps {
        println!("{:?} {} est={:.4e} d={:?}", r.verdict, r.name, r.estimate,
            r.details.iter().filter(|(k,_)| k.contains("worst")||k.contains("violation")||k.contains("min_")||k.contains("floor")).collect::<Vec<_>>());
    }
    let t0 = std::time::Instant::now();
    let (res, slope) = brownian_level_refinement(&cfg, &bm, 0.5,
        &[1.0/256.0, 1.0/1024.0, 1.0/4096.0], &[6000, 6000, 9000]).unwrap();
    println!("refinement took {:?}: residuals {:?} slope {:.3}", t0.elapsed(), res, slope);
}
