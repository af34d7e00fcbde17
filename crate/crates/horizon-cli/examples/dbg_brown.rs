use horizon_cli::config::{ExperimentConfig, Suite};
use horizon_cli::experiments::*;
use horizon_core::MarketModel;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.suite = Suite::Single;
    cfg.n_paths = 2000;
    cfg.table_paths = 20000;
    let bm = MarketModel::brownian(1.0).unwrap();
    let t0 = std::time::Instant::now();
    let reps = run_brownian_level(&cfg, &bm, 0.5).unwrap();
    println!("brownian_level n=2000 took {:?}", t0.elapsed());
    for r in &reps {
        println!("{:?} {} est={:.4e} se={:.1e} exc={:?} details={:?}", r.verdict, r.name, r.estimate, r.std_error, r.exclusions,
            r.details.iter().filter(|(k,_)| !k.starts_with("mean_t")&&!k.starts_with("se_t")).collect::<Vec<_>>());
    }
    let t0 = std::time::Instant::now();
    let (res, slope) = brownian_level_refinement(&cfg, &bm, 0.5,
        &[1.0/256.0, 1.0/1024.0, 1.0/4096.0], &[1000, 2000, 4000]).unwrap();
    println!("refinement took {:?}: residuals {:?} slope {:.3}", t0.elapsed(), res, slope);
}
