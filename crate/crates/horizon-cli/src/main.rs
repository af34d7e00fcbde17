//! Command-line runner for the random-horizon market laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use horizon_cli::config::ExperimentConfig;
use horizon_cli::experiments::{run_experiment, run_full_suite};
use horizon_cli::{read_reports, table, write_reports};
use horizon_core::emery::EmeryCurve;
use horizon_core::path::{effective_horizon, simulate_brownian, simulate_poisson};
use horizon_core::report::Verdict;
use horizon_core::suplaw::{SupHorizon, SupLawTables};
use horizon_core::times::realize;
use horizon_core::{MarketModel, RandomTimeSpec, SamplePath};

const USAGE: &str = "\
horizon — stochastic laboratory for markets with a random horizon

USAGE:
  horizon <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
  simulate            generate an ensemble and export CSV (paths, realized
                      times, supermartingale series)
  verify-honest       honest / non-honest time certificates
  verify-arbitrage    --when before|after: wealth verdicts of the explicit
                      strategies
  verify-deflator     --when before|after: positivity and constant-expectation
                      tests of the NUPBR deflators
  build-tables        pre-build the Monte-Carlo law tables used by the
                      sup-time kinds and the pseudo-stopping curve
  tabulate            assemble report JSONs into the verdict table (CSV+JSON)

FLAGS:
  --config FILE       flat key = value experiment file (defaults otherwise)
  --seed N            override the ensemble seed
  --paths N           override n_paths
  --dt X              override the Brownian grid step
  --out DIR           output directory (reports, tables, CSV)
  --in DIR            input directory (tabulate)
  --threads N         worker threads (0 = all cores)
  --when WHEN         before | after (verify subcommands)

Exit code 0 iff every requested verdict passes.
";

struct Args {
    sub: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    paths: Option<usize>,
    dt: Option<f64>,
    out: Option<PathBuf>,
    input: Option<PathBuf>,
    threads: Option<usize>,
    when: Option<String>,
}

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let sub = argv.next().ok_or_else(|| "missing subcommand".to_string())?;
    let mut args = Args {
        sub,
        config: None,
        seed: None,
        paths: None,
        dt: None,
        out: None,
        input: None,
        threads: None,
        when: None,
    };
    while let Some(flag) = argv.next() {
        let mut take = || argv.next().ok_or(format!("missing value for {flag}"));
        match flag.as_str() {
            "--config" => args.config = Some(PathBuf::from(take()?)),
            "--seed" => args.seed = Some(take()?.parse().map_err(|e| format!("--seed: {e}"))?),
            "--paths" => args.paths = Some(take()?.parse().map_err(|e| format!("--paths: {e}"))?),
            "--dt" => args.dt = Some(take()?.parse().map_err(|e| format!("--dt: {e}"))?),
            "--out" => args.out = Some(PathBuf::from(take()?)),
            "--in" => args.input = Some(PathBuf::from(take()?)),
            "--threads" => {
                args.threads = Some(take()?.parse().map_err(|e| format!("--threads: {e}"))?)
            }
            "--when" => args.when = Some(take()?),
            "--help" | "-h" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(args) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.paths {
        cfg.n_paths = n;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(dir) = &args.out {
        cfg.out_dir = Some(dir.display().to_string());
    }
    cfg.validate()?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().ok();
    }
    let out_dir = PathBuf::from(cfg.out_dir.clone().unwrap_or_else(|| "out".into()));

    match args.sub.as_str() {
        "simulate" => {
            simulate_cmd(&cfg, &out_dir)?;
            Ok(true)
        }
        "verify-honest" | "verify-arbitrage" | "verify-deflator" => {
            let when = args.when.as_deref().unwrap_or("before");
            if !matches!(when, "before" | "after") {
                return Err("--when must be before or after".into());
            }
            let reports = run_experiment(&cfg)?;
            let keep: Vec<_> = reports
                .into_iter()
                .filter(|r| {
                    let check = r.name.split("::").nth(1).unwrap_or("");
                    match args.sub.as_str() {
                        "verify-honest" => check.contains("certificate"),
                        "verify-arbitrage" => match when {
                            "before" => {
                                check.contains("before_tau")
                                    || check.contains("no_arbitrage_before")
                                    || check.contains("jump_identity")
                            }
                            _ => check.contains("after_tau"),
                        },
                        "verify-deflator" => match when {
                            "before" => {
                                check.starts_with("deflator_before") || check.starts_with("g_hat")
                            }
                            _ => check.starts_with("deflator_after"),
                        },
                        _ => unreachable!(),
                    }
                })
                .collect();
            write_reports(&keep, &out_dir)?;
            let mut all_pass = true;
            for r in &keep {
                let tag = match r.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => {
                        all_pass = false;
                        "FAIL"
                    }
                    Verdict::Informational => "INFO",
                };
                println!(
                    "{tag} {} estimate={:.6e} se={:.2e} used={} excluded={}",
                    r.name, r.estimate, r.std_error, r.n_used, r.n_excluded
                );
            }
            println!("reports written to {}", out_dir.display());
            Ok(all_pass)
        }
        "build-tables" => {
            build_tables_cmd(&cfg, &out_dir)?;
            Ok(true)
        }
        "tabulate" => {
            let input = args.input.clone().unwrap_or_else(|| out_dir.clone());
            let reports = read_reports(&input)?;
            let rows = table::tabulate(&reports);
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("table.csv"), table::to_csv(&rows))?;
            std::fs::write(out_dir.join("table.json"), table::to_json(&rows)?)?;
            let mut all_pass = true;
            for row in &rows {
                let tag = match row.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => {
                        all_pass = false;
                        "FAIL"
                    }
                    Verdict::Informational => "INFO",
                };
                println!("{tag} {} ({} checks)", row.row, row.checks);
            }
            println!("table written to {}", out_dir.display());
            Ok(all_pass)
        }
        "full-suite" => {
            // undocumented convenience: the entire battery plus the table
            let reports = run_full_suite(&cfg)?;
            write_reports(&reports, &out_dir)?;
            let rows = table::tabulate(&reports);
            std::fs::write(out_dir.join("table.csv"), table::to_csv(&rows))?;
            std::fs::write(out_dir.join("table.json"), table::to_json(&rows)?)?;
            let all_pass =
                reports.iter().all(|r| r.verdict != Verdict::Fail);
            for row in &rows {
                println!(
                    "{} {} ({} checks)",
                    match row.verdict {
                        Verdict::Pass => "PASS",
                        Verdict::Fail => "FAIL",
                        Verdict::Informational => "INFO",
                    },
                    row.row,
                    row.checks
                );
            }
            Ok(all_pass)
        }
        other => Err(format!("unknown subcommand {other}\n\n{USAGE}").into()),
    }
}

fn simulate_cmd(
    cfg: &ExperimentConfig,
    out_dir: &PathBuf,
) -> Result<(), Box<dyn std::error::Error>> {
    let (model, spec) = cfg.model_and_spec()?;
    std::fs::create_dir_all(out_dir)?;
    let horizon = if spec.infinite_horizon() {
        match spec {
            RandomTimeSpec::ConvexComboJumps { .. }
            | RandomTimeSpec::MinScaledJumps { .. }
            | RandomTimeSpec::MaxScaledJumps { .. } => {
                horizon_core::path::poisson_nth_jump_horizon(model.lambda, 2, cfg.eps)?
            }
            _ => effective_horizon(&model, &spec, cfg.eps)?,
        }
    } else {
        1.0
    };
    let mut paths_csv = String::from(SamplePath::CSV_HEADER);
    paths_csv.push('\n');
    let mut times_csv = String::from("path_id,tau,detected,boundary_atom,aux\n");
    for i in 0..cfg.n_paths as u64 {
        let sp = if model.is_brownian() {
            SamplePath::Brownian(simulate_brownian(&model, horizon, cfg.dt, cfg.seed, i)?)
        } else {
            SamplePath::Poisson(simulate_poisson(&model, horizon, cfg.seed, i)?)
        };
        sp.append_csv_rows(i, &mut paths_csv);
        let r = realize(&spec, &sp)?;
        times_csv.push_str(&format!(
            "{i},{},{},{},{:?}\n",
            r.tau,
            r.detected,
            r.boundary_atom,
            r.aux
        ));
    }
    std::fs::write(out_dir.join("paths.csv"), paths_csv)?;
    std::fs::write(out_dir.join("times.csv"), times_csv)?;
    println!(
        "wrote {} paths (horizon {horizon:.4}) to {}",
        cfg.n_paths,
        out_dir.display()
    );
    Ok(())
}

fn build_tables_cmd(
    cfg: &ExperimentConfig,
    out_dir: &PathBuf,
) -> Result<(), Box<dyn std::error::Error>> {
    let dir = out_dir.join("tables");
    std::fs::create_dir_all(&dir)?;
    let poisson = MarketModel::poisson(cfg.lambda, cfg.psi)?.with_s0(cfg.s0)?;
    let table_seed = cfg.seed ^ 0x7ab1_e5;
    let unit = SupLawTables::build(&poisson, SupHorizon::Unit, cfg.table_paths, table_seed)?;
    let f = dir.join(format!("{}.json", unit.key()));
    unit.save(&f)?;
    println!("wrote {}", f.display());
    let t_max = effective_horizon(&poisson, &RandomTimeSpec::PoissonSupOverall, cfg.eps)?;
    let overall = SupLawTables::build(
        &poisson,
        SupHorizon::Overall { t_max },
        cfg.table_paths,
        table_seed,
    )?;
    let f = dir.join(format!("{}.json", overall.key()));
    overall.save(&f)?;
    println!("wrote {}", f.display());
    let brownian = MarketModel::brownian(cfg.sigma)?.with_s0(cfg.s0)?;
    let curve = EmeryCurve::build(&brownian, cfg.table_paths, cfg.seed ^ 0xe4e7_11, cfg.dt)?;
    let f = dir.join(format!("{}.json", curve.key()));
    curve.save(&f)?;
    println!("wrote {}", f.display());
    Ok(())
}
