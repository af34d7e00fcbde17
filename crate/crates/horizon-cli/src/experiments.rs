//! Ensemble experiments: one pass per (model, time-kind) pair computing all
//! verdicts for that kind, with deterministic parallelism (outcomes are
//! collected per path index and reduced in order, so worker count never
//! changes a byte of output).

use rayon::prelude::*;

use horizon_core::azema::AzemaBundle;
use horizon_core::deflator::{
    brownian_deflator_before, g_hat_poisson, martingale_test, poisson_deflator_after,
    poisson_deflator_before, GHatProcess,
};
use horizon_core::emery::EmeryCurve;
use horizon_core::path::{
    effective_horizon, poisson_nth_jump_horizon, simulate_brownian, simulate_poisson,
};
use horizon_core::report::{Exclusion, ExclusionCounts, McReport, Stats, Verdict};
use horizon_core::ruin::RuinProbTable;
use horizon_core::strategy::{
    brownian_level_wealth, convex_exponent_residuals, estimate_local_time_downcrossings,
    estimate_local_time_occupation, jump_identity_max_ulp, recipe_after_jump_kinds,
    sup_displayed_phi_residual, wealth_poisson,
};
use horizon_core::suplaw::{SupHorizon, SupLawTables};
use horizon_core::times::{realize, TimeAux};
use horizon_core::{Error, MarketModel, RandomTimeSpec, Result, SamplePath};

use crate::config::ExperimentConfig;

/// Seed domain separation: law tables must be independent of the
/// evaluation ensembles.
const TABLE_SEED_SALT: u64 = 0x7ab1_e5;
const EMERY_SEED_SALT: u64 = 0xe4e7_11;

/// Verdict-table row labels, in table order.
pub const DEFAULT_ROWS: [&str; 13] = [
    "brownian_level.before",
    "brownian_level.after",
    "brownian_maturity.before",
    "brownian_maturity.after",
    "poisson_level.before",
    "poisson_level.after",
    "poisson_sup_unit.arbitrage",
    "poisson_sup_overall.arbitrage",
    "emery.pseudo_stopping",
    "convex_combo.non_honest",
    "min_scaled.non_honest",
    "max_scaled.non_honest",
    "deflators.nupbr",
];

pub fn row_order(row: &str) -> usize {
    DEFAULT_ROWS.iter().position(|r| *r == row).unwrap_or(DEFAULT_ROWS.len())
}

fn collect_ordered<O: Send>(
    n: usize,
    f: impl Fn(u64) -> Result<O> + Sync,
) -> Result<Vec<O>> {
    let results: Vec<Result<O>> = (0..n as u64).into_par_iter().map(&f).collect();
    results.into_iter().collect()
}

fn base_report(
    cfg: &ExperimentConfig,
    row: &str,
    name: &str,
    spec: &RandomTimeSpec,
    model: &MarketModel,
    claim: &str,
) -> McReport {
    let model_desc = if model.is_brownian() {
        format!("brownian sigma={} s0={}", model.sigma, model.s0)
    } else {
        format!("poisson lambda={} psi={} s0={}", model.lambda, model.psi, model.s0)
    };
    let mut r = McReport::new(name, spec.kind_name(), &model_desc, claim);
    r.seed = cfg.seed;
    r.config_hash = cfg.hash();
    r.details.insert("row_order".into(), row_order(row) as f64);
    r.name = format!("{row}::{name}");
    r
}

fn pass_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

// ---------------------------------------------------------------------------
// Brownian last passage at a level
// ---------------------------------------------------------------------------

struct BrownLevelOutcome {
    detected: bool,
    z_tilde_gap: f64,
    v_tau: f64,
    v_min: f64,
    ell_down: f64,
    ell_occ: f64,
    identity_residual: f64,
    nu_found: bool,
    v_after: f64,
    l_samples: Vec<f64>,
    ls_samples: Vec<f64>,
}

pub fn run_brownian_level(cfg: &ExperimentConfig, model: &MarketModel, level: f64) -> Result<Vec<McReport>> {
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    spec.validate(model)?;
    let t_max = effective_horizon(model, &spec, cfg.eps)?;
    let dt = cfg.dt;
    let tol = cfg.tolerance_c * dt.sqrt();
    let tol_cert = cfg.tolerance_cert * dt.sqrt();
    let sample_times: Vec<f64> = (1..=5).map(|k| t_max * k as f64 / 5.0).collect();
    let bundle = AzemaBundle::new(spec, *model);

    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<BrownLevelOutcome> {
        let p = simulate_brownian(model, t_max, dt, cfg.seed, i)?;
        let r = realize(&spec, &SamplePath::Brownian(p.clone()))?;
        if !r.detected {
            return Ok(BrownLevelOutcome {
                detected: false,
                z_tilde_gap: f64::NAN,
                v_tau: f64::NAN,
                v_min: f64::NAN,
                ell_down: f64::NAN,
                ell_occ: f64::NAN,
                identity_residual: f64::NAN,
                nu_found: false,
                v_after: f64::NAN,
                l_samples: Vec::new(),
                ls_samples: Vec::new(),
            });
        }
        let i_tau = (r.tau / dt).round() as usize;
        let z_tilde = (p.s(i_tau) / level).min(1.0);
        let (v_tau, v_min) = brownian_level_wealth(&p, level, i_tau);
        let ell_down = estimate_local_time_downcrossings(&p, level, i_tau);
        let ell_occ = estimate_local_time_occupation(&p, level, i_tau);
        let identity_residual = 1.0 + v_tau - z_tilde - ell_down / (2.0 * level);
        // after tau: S stays below the level, phi is constant 1/a, and
        // nu is the first grid point at or below a/2
        let ln_half = (0.5 * level).ln();
        let mut nu_idx = None;
        for j in i_tau + 1..p.ln_s.len() {
            if p.ln_s[j] <= ln_half {
                nu_idx = Some(j);
                break;
            }
        }
        let v_after = match nu_idx {
            Some(j) => (p.s(i_tau) - p.s(j)) / level,
            None => f64::NAN,
        };
        // deflator samples
        let sample_idx: Vec<usize> =
            sample_times.iter().map(|t| ((t / dt).round() as usize).min(p.n_steps())).collect();
        let run = brownian_deflator_before(&bundle, &p, i_tau, &sample_idx)?;
        Ok(BrownLevelOutcome {
            detected: true,
            z_tilde_gap: (z_tilde - 1.0).abs(),
            v_tau,
            v_min,
            ell_down,
            ell_occ,
            identity_residual,
            nu_found: nu_idx.is_some(),
            v_after,
            l_samples: run.l,
            ls_samples: run.deflated,
        })
    })?;

    let mut reports = Vec::new();
    let row_b = "brownian_level.before";
    let row_a = "brownian_level.after";
    let row_d = "deflators.nupbr";

    // honest-time certificate
    {
        let mut ex = ExclusionCounts::default();
        let mut gap = Stats::new();
        let mut violations = 0usize;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            gap.push(o.z_tilde_gap);
            if o.z_tilde_gap > tol_cert {
                violations += 1;
            }
        }
        let frac = violations as f64 / gap.n().max(1) as f64;
        let mut r = base_report(
            cfg,
            row_b,
            "honest_certificate",
            &spec,
            model,
            "Z-tilde at tau equals 1 within the grid tolerance on all but <=1% of paths",
        )
        .with_stats(&gap)
        .with_exclusions(outcomes.len(), &ex)
        .detail("violation_fraction", frac)
        .detail("tolerance", tol_cert);
        r.verdict = pass_fail(frac <= 0.01);
        reports.push(r);
    }

    // before-tau arbitrage
    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut vmin = Stats::new();
        let mut idres = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut admissible = true;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            v.push(o.v_tau);
            vmin.push(o.v_min);
            idres.push(o.identity_residual);
            floor = floor.min(o.v_tau);
            if o.v_tau > tol {
                positives += 1;
            }
            if o.v_min < -1.0 - tol {
                admissible = false;
            }
        }
        let mut r = base_report(
            cfg,
            row_b,
            "before_tau_arbitrage",
            &spec,
            model,
            "wealth of the level strategy held to tau is nonnegative pathwise and positive with positive probability",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_tau", floor)
        .detail("tolerance", tol)
        .detail("mean_identity_residual", idres.mean())
        .detail("min_wealth_overall", vmin.min());
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(
            floor >= -tol && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0 && admissible,
        );
        reports.push(r);
    }

    // after-tau arbitrage
    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            if !o.nu_found {
                ex.bump(Exclusion::UndetectedNu);
                continue;
            }
            v.push(o.v_after);
            floor = floor.min(o.v_after);
            if o.v_after > tol {
                positives += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row_a,
            "after_tau_arbitrage",
            &spec,
            model,
            "the reversed position held from tau to the exit time nu gains at least (1 - S_nu/a)",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_after", floor)
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(floor >= -tol && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0);
        reports.push(r);
    }

    // local-time estimator agreement (ensemble level)
    {
        let (mut down, mut occ) = (Stats::new(), Stats::new());
        for o in outcomes.iter().filter(|o| o.detected) {
            down.push(o.ell_down);
            occ.push(o.ell_occ);
        }
        let rel = (down.mean() - occ.mean()).abs() / down.mean().abs().max(occ.mean().abs());
        let mut r = base_report(
            cfg,
            row_b,
            "local_time_dual_estimators",
            &spec,
            model,
            "downcrossing and occupation estimates of the level local time agree",
        )
        .with_stats(&down)
        .detail("occupation_mean", occ.mean())
        .detail("relative_gap", rel);
        r.n_paths = outcomes.len();
        r.verdict = pass_fail(rel <= 0.10);
        reports.push(r);
    }

    // deflator: positivity + constant expectation of L*S^tau
    {
        let samples: Vec<Vec<f64>> = outcomes
            .iter()
            .filter(|o| o.detected)
            .map(|o| o.ls_samples.clone())
            .collect();
        let l_positive = outcomes
            .iter()
            .filter(|o| o.detected)
            .all(|o| o.l_samples.iter().all(|&x| x > 0.0));
        let mt = martingale_test(&samples, &sample_times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "deflator_before_brownian_level",
            &spec,
            model,
            "L = exp(-int dm/Z + 0.5 int d<m>/Z^2) stays positive and L*S^tau has constant expectation \
             (honest time: the deflator is a strict local martingale with heavy exponential tails, \
             so finite-sample means decay; recorded, see the caveat detail)",
        )
        .detail("strict_local_martingale_caveat", 1.0);
        r.n_paths = outcomes.len();
        r.n_used = samples.len();
        r.estimate = mt.worst_z;
        r.std_error = 1.0;
        r.ci_low = mt.worst_z;
        r.ci_high = mt.worst_z;
        for (k, (m, s)) in mt.means.iter().zip(&mt.ses).enumerate() {
            r.details.insert(format!("mean_t{k}"), *m);
            r.details.insert(format!("se_t{k}"), *s);
        }
        r = r.detail("worst_pair_z", mt.worst_z).detail("l_positive", l_positive as u8 as f64);
        r.verdict = pass_fail(mt.pass && l_positive);
        reports.push(r);
    }

    Ok(reports)
}

/// Grid-refinement study of the before-tau identity residual
/// 1 + V_tau - (Ztilde_tau + A°_{tau-}) with the occupation-time local-time
/// reconstruction of A°. The ensemble-mean residual isolates the O(sqrt dt)
/// systematic part (the left-point sums are mean-unbiased and the
/// downcrossing/occupation estimators differ at that order); the per-path
/// absolute residual is also returned as a detail, scaling like dt^(1/4)
/// through the zero-mean integration noise. Returns the mean residuals and
/// the fitted log-log slope.
pub fn brownian_level_refinement(
    cfg: &ExperimentConfig,
    model: &MarketModel,
    level: f64,
    dts: &[f64],
    n_paths: &[usize],
) -> Result<(Vec<f64>, f64)> {
    let spec = RandomTimeSpec::BrownianLastPassageLevel { level };
    let t_max = effective_horizon(model, &spec, cfg.eps)?;
    let mut residuals = Vec::new();
    for (&dt, &n) in dts.iter().zip(n_paths) {
        let vals = collect_ordered(n, |i| -> Result<f64> {
            let p = simulate_brownian(model, t_max, dt, cfg.seed ^ 0x9e1d, i)?;
            let r = realize(&spec, &SamplePath::Brownian(p.clone()))?;
            if !r.detected {
                return Ok(f64::NAN);
            }
            let i_tau = (r.tau / dt).round() as usize;
            let z_tilde = (p.s(i_tau) / level).min(1.0);
            let (v_tau, _) = brownian_level_wealth(&p, level, i_tau);
            let ell = estimate_local_time_occupation(&p, level, i_tau);
            Ok(1.0 + v_tau - z_tilde - ell / (2.0 * level))
        })?;
        let mut s = Stats::new();
        for v in vals.into_iter().filter(|v| v.is_finite()) {
            s.push(v);
        }
        residuals.push(s.mean().abs());
    }
    // least-squares slope of ln(residual) against ln(dt)
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let den: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    Ok((residuals, num / den))
}

// ---------------------------------------------------------------------------
// Brownian last passage at a level before maturity
// ---------------------------------------------------------------------------

struct MaturityOutcome {
    boundary_atom: bool,
    tau: f64,
    z_tilde_gap: f64,
    z_scale: f64,
    v_tau: f64,
    v_min: f64,
    nu_found: bool,
    v_after: f64,
    l_samples: Vec<f64>,
    ls_samples: Vec<f64>,
    z_hit_zero: bool,
}

pub fn run_brownian_maturity(
    cfg: &ExperimentConfig,
    model: &MarketModel,
    level_b: f64,
) -> Result<Vec<McReport>> {
    let spec = RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b };
    spec.validate(model)?;
    let dt = cfg.dt;
    let tol = cfg.tolerance_c * dt.sqrt();
    let tol_cert = cfg.tolerance_cert * dt.sqrt();
    let sample_times = [0.2, 0.4, 0.6, 0.8, 1.0];
    let bundle = AzemaBundle::new(spec, *model);

    // Z from the local state, avoiding the bundle's per-call first-touch
    // scan: valid for t in [T0, 1).
    let gamma = -0.5 * model.sigma;
    let ln_b = level_b.ln() + model.s0.ln();
    let z_of = |ln_s: f64, t: f64| -> Result<f64> {
        let v = (ln_b - ln_s) / model.sigma;
        Ok((gamma * v).exp() * horizon_core::special::barrier_h(gamma, v.abs(), 1.0 - t)?)
    };

    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<MaturityOutcome> {
        let p = simulate_brownian(model, 1.0, dt, cfg.seed, i)?;
        let sp = SamplePath::Brownian(p.clone());
        let r = realize(&spec, &sp)?;
        let n1 = (1.0 / dt).round() as usize;
        let i_tau = ((r.tau / dt).round() as usize).min(n1);
        let t0 = match r.aux {
            TimeAux::Maturity { t0, .. } => t0,
            _ => unreachable!(),
        };
        // single forward pass: wealth with phi = beta/(sigma S) gated on
        // [T0, 1], the exit scan after tau, deflator accumulators
        let mut v = 0.0;
        let mut v_min = 0.0f64;
        let mut v_tau = 0.0;
        let mut nu_idx: Option<usize> = None;
        let mut ln_l = 0.0_f64;
        let mut l_samples = Vec::with_capacity(sample_times.len());
        let mut ls_samples = Vec::with_capacity(sample_times.len());
        let mut z_hit_zero = false;
        let mut sample_k = 0usize;
        if let Some(t0) = t0 {
            let i0 = (t0 / dt).round() as usize;
            for i in 0..n1 {
                let t = p.t(i);
                while sample_k < sample_times.len() && t >= sample_times[sample_k] - 1e-12 {
                    let lv = ln_l.exp();
                    l_samples.push(lv);
                    ls_samples.push(lv * p.s(i.min(i_tau)));
                    sample_k += 1;
                }
                if i >= i0 {
                    let beta = bundle.maturity_beta(p.ln_s[i], t)?;
                    let phi = beta / (model.sigma * p.s(i));
                    let step_gain = phi * (p.s(i + 1) - p.s(i));
                    if i < i_tau {
                        v += step_gain;
                        v_min = v_min.min(v);
                        // deflator on [T0, tau]
                        let z = z_of(p.ln_s[i], t)?;
                        if z <= 1e-12 {
                            z_hit_zero = true;
                        } else {
                            let c = beta / z;
                            ln_l += -c * p.dw[i] + 0.5 * c * c * dt;
                        }
                    } else {
                        if i == i_tau {
                            v_tau = v;
                        }
                        // after tau: reversed position until the exit time
                        if nu_idx.is_none() {
                            let z = z_of(p.ln_s[i], t)?;
                            if z <= 0.5 {
                                nu_idx = Some(i);
                            } else {
                                v -= step_gain;
                            }
                        }
                    }
                }
            }
        }
        while sample_k < sample_times.len() {
            let lv = ln_l.exp();
            l_samples.push(lv);
            ls_samples.push(lv * p.s(i_tau.min(n1)));
            sample_k += 1;
        }
        if i_tau == n1 || t0.is_none() {
            v_tau = v;
        }
        // wealth of the reversed leg: -(sum of phi dS over [tau, nu))
        let v_after = match nu_idx {
            Some(_) => v - v_tau,
            None => 0.0,
        };
        // certificate: Z-tilde at the detected tau
        let (z_tilde_gap, z_scale) = if r.boundary_atom {
            (0.0, 1.0)
        } else {
            let t_eval = p.t(i_tau).min(1.0 - dt);
            let z = z_of(p.ln_s[(t_eval / dt).round() as usize], t_eval)?;
            // the natural modulus: a sqrt(dt) move of V maps into Z through
            // a derivative of order 1/sqrt(1-t)
            let scale = 1.0 / (1.0 - p.t(i_tau) + dt).max(dt).sqrt();
            ((z - 1.0).abs(), scale)
        };
        Ok(MaturityOutcome {
            boundary_atom: r.boundary_atom,
            tau: r.tau,
            z_tilde_gap,
            z_scale,
            v_tau,
            v_min,
            nu_found: nu_idx.is_some() || r.boundary_atom,
            v_after,
            l_samples,
            ls_samples,
            z_hit_zero,
        })
    })?;

    let mut reports = Vec::new();
    let row_b = "brownian_maturity.before";
    let row_a = "brownian_maturity.after";
    let row_d = "deflators.nupbr";

    {
        let mut gap = Stats::new();
        let mut atoms = 0usize;
        let mut violations = 0usize;
        for o in &outcomes {
            if o.boundary_atom {
                atoms += 1;
                continue;
            }
            gap.push(o.z_tilde_gap);
            if o.z_tilde_gap > tol_cert * o.z_scale {
                violations += 1;
            }
        }
        let frac = violations as f64 / gap.n().max(1) as f64;
        let mut r = base_report(
            cfg,
            row_b,
            "honest_certificate",
            &spec,
            model,
            "Z-tilde at the last passage before maturity equals 1 within the local grid tolerance",
        )
        .with_stats(&gap)
        .detail("violation_fraction", frac)
        .detail("boundary_atoms", atoms as f64)
        .detail("tolerance", tol);
        r.n_paths = outcomes.len();
        r.verdict = pass_fail(frac <= 0.01);
        reports.push(r);
    }

    {
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut floor_breaches = 0usize;
        let mut admissible = true;
        for o in &outcomes {
            v.push(o.v_tau);
            floor = floor.min(o.v_tau);
            if o.v_tau > tol {
                positives += 1;
            }
            // the integrand grows like 1/sqrt(1-t) near maturity, so the
            // pathwise floor carries the local modulus of the grid error
            if o.v_tau < -tol * o.z_scale {
                floor_breaches += 1;
            }
            if o.v_min < -1.0 - tol * o.z_scale {
                admissible = false;
            }
        }
        let mut r = base_report(
            cfg,
            row_b,
            "before_tau_arbitrage",
            &spec,
            model,
            "wealth of the barrier-function strategy held to tau is nonnegative pathwise and positive with positive probability",
        )
        .with_stats(&v)
        .with_frac_positive(positives, v.n())
        .detail("min_v_tau", floor)
        .detail("floor_breaches", floor_breaches as f64)
        .detail("tolerance", tol);
        r.n_paths = outcomes.len();
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(
            floor_breaches == 0 && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0 && admissible,
        );
        reports.push(r);
    }

    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut floor_breaches = 0usize;
        for o in &outcomes {
            if o.boundary_atom {
                ex.bump(Exclusion::BoundaryAtom);
                continue;
            }
            if !o.nu_found {
                ex.bump(Exclusion::UndetectedNu);
                continue;
            }
            v.push(o.v_after);
            floor = floor.min(o.v_after);
            if o.v_after > tol {
                positives += 1;
            }
            if o.v_after < -tol * o.z_scale {
                floor_breaches += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row_a,
            "after_tau_arbitrage",
            &spec,
            model,
            "the reversed position from tau to the exit time nu has nonnegative gain, positive with positive probability",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_after", floor)
        .detail("floor_breaches", floor_breaches as f64)
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict =
            pass_fail(floor_breaches == 0 && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0);
        reports.push(r);
    }

    {
        let samples: Vec<Vec<f64>> = outcomes.iter().map(|o| o.ls_samples.clone()).collect();
        let l_positive = outcomes.iter().all(|o| o.l_samples.iter().all(|&x| x > 0.0));
        let z_zero = outcomes.iter().filter(|o| o.z_hit_zero).count();
        let mt = martingale_test(&samples, &sample_times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "deflator_before_brownian_maturity",
            &spec,
            model,
            "the continuous-filtration deflator keeps L*S^tau at constant expectation",
        )
        .detail("worst_pair_z", mt.worst_z)
        .detail("l_positive", l_positive as u8 as f64)
        .detail("z_hit_zero_paths", z_zero as f64);
        r.n_paths = outcomes.len();
        r.n_used = samples.len();
        r.estimate = mt.worst_z;
        r.verdict = pass_fail(mt.pass && l_positive);
        reports.push(r);
    }

    let _ = outcomes.iter().map(|o| o.tau).count();
    Ok(reports)
}

// ---------------------------------------------------------------------------
// The pseudo-stopping time
// ---------------------------------------------------------------------------

pub fn run_emery(cfg: &ExperimentConfig, model: &MarketModel) -> Result<Vec<McReport>> {
    let spec = RandomTimeSpec::EmeryPseudo;
    spec.validate(model)?;
    let dt = cfg.dt;
    let curve = EmeryCurve::build(model, cfg.table_paths, cfg.seed ^ EMERY_SEED_SALT, dt)?;
    let curve2 = EmeryCurve::build(model, cfg.table_paths, cfg.seed ^ EMERY_SEED_SALT ^ 1, dt)?;
    let sample_times = [0.2, 0.4, 0.6, 0.8, 1.0];

    struct Out {
        atom: bool,
        v_buy_hold: f64,
        after_gain: f64,
        s_tau_samples: Vec<f64>,
    }
    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<Out> {
        let p = simulate_brownian(model, 1.0, dt, cfg.seed, i)?;
        let r = realize(&spec, &SamplePath::Brownian(p.clone()))?;
        let i_tau = (r.tau / dt).round() as usize;
        let n1 = (1.0 / dt).round() as usize;
        let s1 = p.s(n1);
        // at tau the price equals half the terminal value by construction;
        // the grid value carries an O(sqrt dt) detection offset the exact
        // structural price avoids
        let s_tau = if r.boundary_atom { model.s0 } else { 0.5 * s1 };
        let samples = sample_times
            .iter()
            .map(|t| {
                let idx = (t / dt).round() as usize;
                if idx < i_tau {
                    p.s(idx)
                } else {
                    s_tau
                }
            })
            .collect();
        Ok(Out {
            atom: r.boundary_atom,
            v_buy_hold: s_tau - model.s0,
            after_gain: s1 - s_tau,
            s_tau_samples: samples,
        })
    })?;

    let mut reports = Vec::new();
    let row = "emery.pseudo_stopping";
    let row_d = "deflators.nupbr";

    {
        // no arbitrage before tau: buy-and-hold has zero mean wealth
        let mut v = Stats::new();
        for o in &outcomes {
            v.push(o.v_buy_hold);
        }
        let z = v.mean().abs() / v.se();
        let mut r = base_report(
            cfg,
            row,
            "no_arbitrage_before",
            &spec,
            model,
            "buy-and-hold to the pseudo-stopping time has mean wealth 0 (the price is a martingale up to tau)",
        )
        .with_stats(&v)
        .detail("z_score", z);
        r.n_paths = outcomes.len();
        r.verdict = pass_fail(z <= 3.0);
        reports.push(r);
    }

    {
        // Z is deterministic: the evaluator output is path-free by
        // construction; the estimator must also be stable across seeds
        let a = curve.phi(1.0)?;
        let b = curve2.phi(1.0)?;
        let gap = (a.v - b.v).abs();
        let lim = 3.0 * a.se.hypot(b.se);
        let mut r = base_report(
            cfg,
            row,
            "deterministic_survival",
            &spec,
            model,
            "the conditional survival probability is a deterministic decreasing function of time",
        )
        .detail("phi_seed_a", a.v)
        .detail("phi_seed_b", b.v)
        .detail("across_path_spread", 0.0)
        .detail("seed_gap", gap)
        .detail("seed_gap_limit", lim);
        r.n_paths = cfg.table_paths;
        r.estimate = a.v;
        r.std_error = a.se;
        // monotone within noise
        let mono = (0..curve.u_grid.len() - 1).all(|k| {
            let x = curve.phi(curve.u_grid[k]).unwrap();
            let y = curve.phi(curve.u_grid[k + 1]).unwrap();
            y.v <= x.v + 3.0 * x.se.hypot(y.se)
        });
        r = r.detail("monotone", mono as u8 as f64);
        r.verdict = pass_fail(gap <= lim && mono);
        reports.push(r);
    }

    {
        // after tau: buy at tau, sell at 1; S_t > S_tau pathwise there
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let tol = cfg.tolerance_c * dt.sqrt();
        for o in &outcomes {
            if o.atom {
                ex.bump(Exclusion::BoundaryAtom);
                continue;
            }
            v.push(o.after_gain);
            floor = floor.min(o.after_gain);
            if o.after_gain > tol {
                positives += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "after_tau_recipe",
            &spec,
            model,
            "buying at tau and selling at maturity gains S_1 - S_1/2 > 0 on every crossing path",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_gain", floor)
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(floor >= -tol && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0);
        reports.push(r);
    }

    {
        // deflator is identically 1; S^tau itself must pass the test
        let samples: Vec<Vec<f64>> = outcomes.iter().map(|o| o.s_tau_samples.clone()).collect();
        let mt = martingale_test(&samples, &sample_times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "deflator_before_emery",
            &spec,
            model,
            "m = 1 makes the deflator trivial: S stopped at tau already has constant expectation",
        )
        .detail("worst_pair_z", mt.worst_z);
        r.n_paths = outcomes.len();
        r.n_used = samples.len();
        r.estimate = mt.worst_z;
        r.verdict = pass_fail(mt.pass);
        reports.push(r);
    }

    Ok(reports)
}

// ---------------------------------------------------------------------------
// Poisson last passage at a level
// ---------------------------------------------------------------------------

pub fn run_poisson_level(
    cfg: &ExperimentConfig,
    model: &MarketModel,
    level_b: f64,
) -> Result<Vec<McReport>> {
    let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b };
    spec.validate(model)?;
    let ruin = RuinProbTable::new(model.theta())?;
    let t_max = effective_horizon(model, &spec, cfg.eps)?;
    let tol = cfg.tolerance_exact;
    let theta = model.theta();
    let psi0 = 1.0 / (1.0 + theta);
    // exit threshold and its exact level crossing offset
    let x_star = ruin.inverse(0.5 * psi0)?;
    let sample_times: Vec<f64> = (1..=5).map(|k| t_max * k as f64 / 5.0).collect();

    struct Out {
        detected: bool,
        z_tilde_gap: f64,
        v_tau: f64,
        v_min: f64,
        identity_gap: f64,
        jump_ulp: f64,
        nu_found: bool,
        v_after: f64,
        after_bound_ok: bool,
        l_before: Vec<f64>,
        ls_before: Vec<f64>,
        min_factor_before: f64,
        l_after: Vec<f64>,
        lsd_after: Vec<f64>,
        min_factor_after: f64,
        z_hit_zero: bool,
    }

    let bundle_proto = || AzemaBundle::new(spec, *model);
    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<Out> {
        let bundle = bundle_proto().with_ruin(&ruin);
        let p = simulate_poisson(model, t_max, cfg.seed, i)?;
        let sp = SamplePath::Poisson(p.clone());
        let r = realize(&spec, &sp)?;
        if !r.detected {
            return Ok(Out {
                detected: false,
                z_tilde_gap: f64::NAN,
                v_tau: f64::NAN,
                v_min: f64::NAN,
                identity_gap: f64::NAN,
                jump_ulp: f64::NAN,
                nu_found: false,
                v_after: f64::NAN,
                after_bound_ok: true,
                l_before: Vec::new(),
                ls_before: Vec::new(),
                min_factor_before: 1.0,
                l_after: Vec::new(),
                lsd_after: Vec::new(),
                min_factor_after: 1.0,
                z_hit_zero: false,
            });
        }
        let tau = r.tau;
        let z_tilde = bundle.z_tilde(&sp, tau)?.v;
        // wealth to tau, with the minimum checked at jump left limits
        let v_tau = wealth_poisson(&bundle, &p, 0.0, tau)?.v;
        let mut v_min = 0.0f64;
        {
            let mut acc = 0.0;
            let mut lo = 0.0;
            for &tj in p.jumps.iter().filter(|&&x| x <= tau) {
                let pre =
                    acc + wealth_poisson(&bundle, &p, lo, tj)?.v - bundle.poisson_nu_hat(&p, tj)?.v;
                v_min = v_min.min(pre);
                acc += wealth_poisson(&bundle, &p, lo, tj)?.v;
                v_min = v_min.min(acc);
                lo = tj;
            }
            acc += wealth_poisson(&bundle, &p, lo, tau)?.v;
            v_min = v_min.min(acc);
        }
        let m_tau = bundle.m(&sp, tau)?.v;
        let identity_gap = (1.0 + v_tau - m_tau).abs();
        let jump_ulp = jump_identity_max_ulp(&bundle, &p, tau)?;
        // exit time: first continuous crossing of Y through level + x_star
        let a = bundle.y_level();
        let mu = p.mu();
        let mut nu = None;
        let k_tau = p.jumps.partition_point(|&x| x <= tau);
        for k in k_tau..=p.jumps.len() {
            let seg_start = if k == 0 { 0.0 } else { p.jumps[k - 1] };
            let seg_end = if k == p.jumps.len() { p.horizon } else { p.jumps[k] };
            let cross = (a + x_star + k as f64) / mu;
            if cross >= seg_start.max(tau) && cross < seg_end {
                nu = Some(cross);
                break;
            }
        }
        let (v_after, after_bound_ok) = match nu {
            Some(nu_t) => {
                let v = -wealth_poisson(&bundle, &p, tau, nu_t)?.v;
                // m_nu - m_tau <= (dA_tau - 1)/2 pathwise
                let bound = (theta / (1.0 + theta) - 1.0) / 2.0;
                ((v), -v <= bound + 1e-6)
            }
            None => (f64::NAN, true),
        };
        // deflators
        let run_b = poisson_deflator_before(&bundle, &p, tau, &sample_times)?;
        let run_a = poisson_deflator_after(&bundle, &p, tau, &sample_times)?;
        Ok(Out {
            detected: true,
            z_tilde_gap: (z_tilde - 1.0).abs(),
            v_tau,
            v_min,
            identity_gap,
            jump_ulp,
            nu_found: nu.is_some(),
            v_after,
            after_bound_ok,
            l_before: run_b.l,
            ls_before: run_b.deflated,
            min_factor_before: run_b.min_jump_factor,
            l_after: run_a.l,
            lsd_after: run_a.deflated,
            min_factor_after: run_a.min_jump_factor,
            z_hit_zero: run_b.z_hit_zero || run_a.z_hit_zero,
        })
    })?;

    let mut reports = Vec::new();
    let row_b = "poisson_level.before";
    let row_a = "poisson_level.after";
    let row_d = "deflators.nupbr";

    {
        let mut ex = ExclusionCounts::default();
        let mut gap = Stats::new();
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            gap.push(o.z_tilde_gap);
        }
        let mut r = base_report(
            cfg,
            row_b,
            "honest_certificate",
            &spec,
            model,
            "Z-tilde at the last visit equals 1 exactly (ruin series anchor + the visit jump of the projection)",
        )
        .with_stats(&gap)
        .with_exclusions(outcomes.len(), &ex)
        .detail("max_gap", gap.max())
        .detail("tolerance", tol);
        r.verdict = pass_fail(gap.max() <= tol);
        reports.push(r);
    }

    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut ident = Stats::new();
        let mut ulps = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut admissible = true;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            v.push(o.v_tau);
            ident.push(o.identity_gap);
            ulps.push(o.jump_ulp);
            floor = floor.min(o.v_tau);
            if o.v_tau > tol {
                positives += 1;
            }
            if o.v_min < -1.0 - tol {
                admissible = false;
            }
        }
        let mut r = base_report(
            cfg,
            row_b,
            "before_tau_arbitrage",
            &spec,
            model,
            "1 + V reproduces m pathwise; V at tau is nonnegative and positive with positive probability",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_tau", floor)
        .detail("max_identity_gap", ident.max())
        .detail("max_jump_ulp", ulps.max())
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(
            floor >= -tol
                && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0
                && ident.max() <= tol
                && ulps.max() <= 8.0
                && admissible,
        );
        reports.push(r);
    }

    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut bound_ok = true;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            if !o.nu_found {
                ex.bump(Exclusion::UndetectedNu);
                continue;
            }
            v.push(o.v_after);
            floor = floor.min(o.v_after);
            if o.v_after > tol {
                positives += 1;
            }
            bound_ok &= o.after_bound_ok;
        }
        let mut r = base_report(
            cfg,
            row_a,
            "after_tau_arbitrage",
            &spec,
            model,
            "the reversed position held to the exit time gains (1+theta)^-1/2 exactly on every detected path",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_after", floor)
        .detail("expected_gain", 0.5 * psi0)
        .detail("exit_bound_holds", bound_ok as u8 as f64)
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(
            floor >= -tol && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0 && bound_ok,
        );
        reports.push(r);
    }

    {
        let used: Vec<&Out> = outcomes.iter().filter(|o| o.detected).collect();
        let z_zero = used.iter().filter(|o| o.z_hit_zero).count();

        let samples_b: Vec<Vec<f64>> = used.iter().map(|o| o.ls_before.clone()).collect();
        let positive_b = used
            .iter()
            .all(|o| o.l_before.iter().all(|&x| x > 0.0) && o.min_factor_before > 0.0);
        let mt_b = martingale_test(&samples_b, &sample_times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "deflator_before_poisson_level",
            &spec,
            model,
            "the jump-exponential deflator keeps L*S^tau at constant expectation with positive factors \
             (honest time: the deflator is a strict local martingale, so late-horizon means may decay)",
        )
        .detail("strict_local_martingale_caveat", 1.0)
        .detail("worst_pair_z", mt_b.worst_z)
        .detail(
            "min_jump_factor",
            used.iter().map(|o| o.min_factor_before).fold(f64::INFINITY, f64::min),
        )
        .detail("z_hit_zero_paths", z_zero as f64);
        r.n_paths = outcomes.len();
        r.n_used = used.len();
        r.estimate = mt_b.worst_z;
        r.verdict = pass_fail(mt_b.pass && positive_b && z_zero == 0);
        reports.push(r);

        // after tau, gated on Z_tau < 1 (satisfied by this kind exactly)
        let samples_a: Vec<Vec<f64>> = used.iter().map(|o| o.lsd_after.clone()).collect();
        let positive_a = used
            .iter()
            .all(|o| o.l_after.iter().all(|&x| x > 0.0) && o.min_factor_after > 0.0);
        let mt_a = martingale_test(&samples_a, &sample_times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "deflator_after_poisson_level",
            &spec,
            model,
            "after tau (Z_tau = Psi(0) < 1) the deflator keeps L*(S - S^tau) at constant expectation",
        )
        .detail("worst_pair_z", mt_a.worst_z)
        .detail(
            "min_jump_factor",
            used.iter().map(|o| o.min_factor_after).fold(f64::INFINITY, f64::min),
        )
        .detail("z_tau", psi0);
        r.n_paths = outcomes.len();
        r.n_used = used.len();
        r.estimate = mt_a.worst_z;
        r.verdict = pass_fail(mt_a.pass && positive_a);
        reports.push(r);
    }

    {
        // compensated price before tau: constant expectation of S-hat
        let n_small = (cfg.n_paths / 5).clamp(2000, 20_000);
        let times: Vec<f64> = (1..=4).map(|k| t_max * k as f64 / 4.0).collect();
        let ghat = collect_ordered(n_small, |i| -> Result<Vec<f64>> {
            let bundle = bundle_proto().with_ruin(&ruin);
            let p = simulate_poisson(model, t_max, cfg.seed ^ 0x57a7, i)?;
            let sp = SamplePath::Poisson(p.clone());
            let r = realize(&spec, &sp)?;
            if !r.detected {
                return Ok(Vec::new());
            }
            g_hat_poisson(&bundle, &p, r.tau, GHatProcess::Price, &times, false)
        })?;
        let samples: Vec<Vec<f64>> = ghat.into_iter().filter(|v| !v.is_empty()).collect();
        let mt = martingale_test(&samples, &times, 3.0)?;
        let mut r = base_report(
            cfg,
            row_d,
            "g_hat_price_poisson_level",
            &spec,
            model,
            "the Jeulin-compensated price before tau has constant expectation",
        )
        .detail("worst_pair_z", mt.worst_z);
        r.n_paths = n_small;
        r.n_used = samples.len();
        r.estimate = mt.worst_z;
        r.verdict = pass_fail(mt.pass);
        reports.push(r);
    }

    Ok(reports)
}

// ---------------------------------------------------------------------------
// Poisson times of supremum
// ---------------------------------------------------------------------------

pub fn run_poisson_sup(
    cfg: &ExperimentConfig,
    model: &MarketModel,
    unit: bool,
) -> Result<Vec<McReport>> {
    let spec =
        if unit { RandomTimeSpec::PoissonSupOnUnit } else { RandomTimeSpec::PoissonSupOverall };
    spec.validate(model)?;
    let horizon = if unit {
        1.0
    } else {
        effective_horizon(model, &spec, cfg.eps)?
    };
    let tables = SupLawTables::build(
        model,
        if unit { SupHorizon::Unit } else { SupHorizon::Overall { t_max: horizon } },
        cfg.table_paths,
        cfg.seed ^ TABLE_SEED_SALT,
    )?;
    let row = if unit { "poisson_sup_unit.arbitrage" } else { "poisson_sup_overall.arbitrage" };

    struct Out {
        detected: bool,
        atom: bool,
        z_tilde_gap: f64,
        z_tilde_tol: f64,
        v_tau: f64,
        v_tol: f64,
        identity_gap: f64,
        identity_tol: f64,
        jump_ulp: f64,
        literal_ulp: f64,
        nu_state: u8, // 0 found, 1 undetected, 2 ambiguous
        v_after: f64,
        after_tol: f64,
    }

    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<Out> {
        let bundle = AzemaBundle::new(spec, *model).with_sup(&tables);
        let p = simulate_poisson(model, horizon, cfg.seed, i)?;
        let sp = SamplePath::Poisson(p.clone());
        let r = realize(&spec, &sp)?;
        if !r.detected {
            return Ok(Out {
                detected: false,
                atom: false,
                z_tilde_gap: f64::NAN,
                z_tilde_tol: 0.0,
                v_tau: f64::NAN,
                v_tol: 0.0,
                identity_gap: f64::NAN,
                identity_tol: 0.0,
                jump_ulp: f64::NAN,
                literal_ulp: f64::NAN,
                nu_state: 1,
                v_after: f64::NAN,
                after_tol: 0.0,
            });
        }
        let tau = r.tau;
        let zt = bundle.z_tilde(&sp, tau)?;
        let jump_ulp = jump_identity_max_ulp(&bundle, &p, horizon)?;
        let literal_ulp = sup_displayed_phi_residual(&bundle, &p, horizon)?;
        // wealth before tau with propagated standard errors
        let (v_tau, v_tol, identity_gap, identity_tol) = if r.boundary_atom {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let v = wealth_poisson(&bundle, &p, 0.0, tau)?;
            let m_tau = bundle.m(&sp, tau)?;
            let m_0 = bundle.m(&sp, 0.0)?;
            let gap = (v.v - (m_tau.v - m_0.v)).abs();
            // 3 propagated standard errors plus the tables' bilinear
            // interpolation modulus (deterministic, not in the SEs)
            let interp = INTERP_SLACK * (1.0 + path_time_scale(&p, tau));
            let gap_tol = 3.0 * v.se.hypot(m_tau.se.hypot(m_0.se)) + interp + cfg.tolerance_exact;
            (v.v, 3.0 * v.se + interp + cfg.tolerance_exact, gap, gap_tol)
        };
        // after tau for psi > 0: exit when Z-tilde drops below (1-dA_tau)/2
        let (nu_state, v_after, after_tol) = if model.psi > 0.0 && !r.boundary_atom {
            let da = bundle.poisson_da_opt(&p, tau)?;
            let thr = (1.0 - da.v) / 2.0;
            let thr_se = da.se / 2.0;
            match sup_exit_scan(&bundle, &p, tau, horizon, thr, thr_se)? {
                ExitScan::Found(nu_t) => {
                    let v = wealth_poisson(&bundle, &p, tau, nu_t)?;
                    (0u8, -v.v, 3.0 * v.se + cfg.tolerance_exact)
                }
                ExitScan::Ambiguous => (2, f64::NAN, 0.0),
                ExitScan::Undetected => (1, f64::NAN, 0.0),
            }
        } else {
            (1, f64::NAN, 0.0)
        };
        Ok(Out {
            detected: true,
            atom: r.boundary_atom,
            z_tilde_gap: (zt.v - 1.0).abs(),
            z_tilde_tol: 3.0 * zt.se + cfg.tolerance_exact,
            v_tau,
            v_tol,
            identity_gap,
            identity_tol,
            jump_ulp,
            literal_ulp,
            nu_state,
            v_after,
            after_tol,
        })
    })?;

    let mut reports = Vec::new();

    {
        let mut ex = ExclusionCounts::default();
        let mut gap = Stats::new();
        let mut violations = 0usize;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            gap.push(o.z_tilde_gap);
            if o.z_tilde_gap > o.z_tilde_tol {
                violations += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "honest_certificate",
            &spec,
            model,
            "Z-tilde at the time of supremum equals 1 within the table errors (record probability + its complement)",
        )
        .with_stats(&gap)
        .with_exclusions(outcomes.len(), &ex)
        .detail("violations", violations as f64);
        r.verdict = pass_fail(violations == 0);
        reports.push(r);
    }

    {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut ulps = Stats::new();
        let mut literal = Stats::new();
        let mut positives = 0usize;
        let mut floor_breach = 0usize;
        let mut ident_breach = 0usize;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            if o.atom {
                ex.bump(Exclusion::BoundaryAtom);
                continue;
            }
            v.push(o.v_tau);
            ulps.push(o.jump_ulp);
            literal.push(o.literal_ulp);
            if o.v_tau > o.v_tol {
                positives += 1;
            }
            if o.v_tau < -o.v_tol {
                floor_breach += 1;
            }
            if o.identity_gap > o.identity_tol {
                ident_breach += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "before_tau_arbitrage",
            &spec,
            model,
            "V at tau reproduces m - m_0 within the propagated table errors and is positive with positive probability",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("floor_breaches", floor_breach as f64)
        .detail("identity_breaches", ident_breach as f64)
        .detail("max_jump_ulp", ulps.max())
        .detail("displayed_phi_max_ulp", literal.max());
        r.min_wealth = Some(v.min());
        r.verdict = pass_fail(
            floor_breach == 0
                && ident_breach == 0
                && ulps.max() <= 8.0
                && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0,
        );
        reports.push(r);
    }

    if model.psi > 0.0 {
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor_breach = 0usize;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            if o.atom {
                ex.bump(Exclusion::BoundaryAtom);
                continue;
            }
            match o.nu_state {
                1 => {
                    ex.bump(Exclusion::UndetectedNu);
                    continue;
                }
                2 => {
                    ex.bump(Exclusion::AmbiguousThreshold);
                    continue;
                }
                _ => {}
            }
            v.push(o.v_after);
            if o.v_after > o.after_tol {
                positives += 1;
            }
            if o.v_after < -o.after_tol {
                floor_breach += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "after_tau_arbitrage",
            &spec,
            model,
            "the reversed position held from tau to the exit time has nonnegative gain within table errors",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("floor_breaches", floor_breach as f64);
        r.min_wealth = Some(v.min());
        r.verdict =
            pass_fail(floor_breach == 0 && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0);
        reports.push(r);
    }

    Ok(reports)
}

/// Bilinear-interpolation modulus of the cached sup-law tables per unit of
/// accumulated lookup weight (cell width squared times a curvature bound).
const INTERP_SLACK: f64 = 2e-3;

fn path_time_scale(p: &horizon_core::PoissonPath, tau: f64) -> f64 {
    // drift integrals accumulate roughly lambda * tau lookups
    (p.lambda * tau).max(1.0).sqrt()
}

enum ExitScan {
    Found(f64),
    Undetected,
    Ambiguous,
}

/// First time Z-tilde clearly drops below the threshold after tau (segment
/// scan plus bisection). A crossing is clear when the value lands at least
/// one standard error below the threshold; a path that dips below but never
/// clearly is flagged ambiguous and excluded.
fn sup_exit_scan(
    bundle: &AzemaBundle<'_>,
    path: &horizon_core::PoissonPath,
    tau: f64,
    horizon: f64,
    thr: f64,
    thr_se: f64,
) -> Result<ExitScan> {
    let sp = SamplePath::Poisson(path.clone());
    let zt = |t: f64| -> Result<horizon_core::Val> { bundle.z_tilde(&sp, t) };
    let mut lo = tau;
    let mut bounds: Vec<f64> =
        path.jumps.iter().copied().filter(|&x| x > tau && x < horizon).collect();
    bounds.push(horizon);
    let mut dipped_unclear = false;
    for hi in bounds {
        // sample the segment; Z-tilde is continuous inside (and monotone
        // decreasing for psi > 0, where two endpoint looks suffice)
        let steps = if path.psi > 0.0 { 2 } else { 24 };
        if path.psi > 0.0 {
            let end = zt(hi)?;
            if end.v > thr {
                lo = hi;
                continue;
            }
        }
        let mut prev_t = lo;
        for k in 1..=steps {
            let t = lo + (hi - lo) * k as f64 / steps as f64;
            let cur = zt(t)?;
            if cur.v <= thr {
                dipped_unclear = true;
                if cur.v <= thr - cur.se.hypot(thr_se) {
                    // clear crossing: bisect back to the boundary
                    let (mut a, mut b) = (prev_t, t);
                    for _ in 0..50 {
                        let m = 0.5 * (a + b);
                        if zt(m)?.v > thr {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    return Ok(ExitScan::Found(b));
                }
            }
            prev_t = t;
        }
        lo = hi;
    }
    if dipped_unclear {
        Ok(ExitScan::Ambiguous)
    } else {
        Ok(ExitScan::Undetected)
    }
}

// ---------------------------------------------------------------------------
// Jump-combination kinds
// ---------------------------------------------------------------------------

pub fn run_jump_kind(
    cfg: &ExperimentConfig,
    model: &MarketModel,
    spec: RandomTimeSpec,
) -> Result<Vec<McReport>> {
    spec.validate(model)?;
    let horizon = poisson_nth_jump_horizon(model.lambda, 2, cfg.eps)?;
    let tol = cfg.tolerance_exact;
    let row = match spec {
        RandomTimeSpec::ConvexComboJumps { .. } => "convex_combo.non_honest",
        RandomTimeSpec::MinScaledJumps { .. } => "min_scaled.non_honest",
        RandomTimeSpec::MaxScaledJumps { .. } => "max_scaled.non_honest",
        _ => return Err(Error::Contract("not a jump-combination kind".into())),
    };
    let sample_times: Vec<f64> = (1..=5).map(|k| horizon * k as f64 / 5.0).collect();

    struct Out {
        detected: bool,
        z_match_gap: f64,
        z_tilde_tau: f64,
        strict_applies: bool,
        jump_ulp: f64,
        exponent_k12_ulp: f64,
        exponent_k21_ulp: f64,
        v_tau: f64,
        v_tau_open: f64,
        identity_gap: f64,
        window_realized: bool,
        recipe_gain: f64,
        l_samples: Vec<f64>,
        ls_samples: Vec<f64>,
        min_factor: f64,
        z_hit_zero: bool,
    }

    let outcomes = collect_ordered(cfg.n_paths, |i| -> Result<Out> {
        let bundle = AzemaBundle::new(spec, *model);
        let p = simulate_poisson(model, horizon, cfg.seed, i)?;
        let sp = SamplePath::Poisson(p.clone());
        let r = realize(&spec, &sp)?;
        if !r.detected {
            return Ok(Out {
                detected: false,
                z_match_gap: f64::NAN,
                z_tilde_tau: f64::NAN,
                strict_applies: false,
                jump_ulp: f64::NAN,
                exponent_k12_ulp: f64::NAN,
                exponent_k21_ulp: f64::NAN,
                v_tau: f64::NAN,
                v_tau_open: f64::NAN,
                identity_gap: f64::NAN,
                window_realized: false,
                recipe_gain: f64::NAN,
                l_samples: Vec::new(),
                ls_samples: Vec::new(),
                min_factor: 1.0,
                z_hit_zero: false,
            });
        }
        let tau = r.tau;
        let (t1, t2) = match r.aux {
            TimeAux::TwoJumps { t1, t2 } => (t1, t2),
            _ => unreachable!(),
        };
        // closed-form reference for Z-tilde at tau, straight from (T1, T2)
        let (reference, strict_applies) = match spec {
            RandomTimeSpec::ConvexComboJumps { k1, .. } => {
                ((-model.lambda * k1 * (t2 - t1)).exp(), true)
            }
            RandomTimeSpec::MinScaledJumps { scale } => {
                let beta = model.lambda * (1.0 / scale - 1.0);
                (horizon_core::azema::min_g(beta, tau), t1 > scale * t2)
            }
            RandomTimeSpec::MaxScaledJumps { scale } => {
                if t1 >= scale * t2 {
                    (1.0, false)
                } else {
                    (horizon_core::azema::max_kbar(model.lambda, scale, tau), true)
                }
            }
            _ => unreachable!(),
        };
        let zt = bundle.z_tilde(&sp, tau)?.v;
        let z_match_gap = (zt - reference).abs() / reference.abs().max(1e-300);
        let jump_ulp = jump_identity_max_ulp(&bundle, &p, p.horizon)?;
        let (e12, e21) = match spec {
            RandomTimeSpec::ConvexComboJumps { k1, k2 } => {
                convex_exponent_residuals(model, k1, k2, &p)?
            }
            _ => (0.0, 0.0),
        };
        let v_tau = wealth_poisson(&bundle, &p, 0.0, tau)?.v;
        let jump_at_tau = if p.jumps.contains(&tau) {
            bundle.poisson_nu_hat(&p, tau)?.v
        } else {
            0.0
        };
        let v_tau_open = v_tau - jump_at_tau;
        let m_tau = bundle.m(&sp, tau)?.v;
        let identity_gap = (1.0 + v_tau - m_tau).abs();
        let recipe = recipe_after_jump_kinds(&spec, &p, tau)?;
        // deflator before tau
        let run = poisson_deflator_before(&bundle, &p, tau, &sample_times)?;
        Ok(Out {
            detected: true,
            z_match_gap,
            z_tilde_tau: zt,
            strict_applies,
            jump_ulp,
            exponent_k12_ulp: e12,
            exponent_k21_ulp: e21,
            v_tau,
            v_tau_open,
            identity_gap,
            window_realized: recipe.is_some(),
            recipe_gain: recipe.unwrap_or(f64::NAN),
            l_samples: run.l,
            ls_samples: run.deflated,
            min_factor: run.min_jump_factor,
            z_hit_zero: run.z_hit_zero,
        })
    })?;

    let mut reports = Vec::new();
    let kind = spec.kind_name();

    {
        // non-honest certificate: Z-tilde matches the closed form exactly;
        // strict inequality < 1 where the proposition states it
        let mut ex = ExclusionCounts::default();
        let mut gap = Stats::new();
        let mut strict_ok = true;
        let mut strict_n = 0usize;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            gap.push(o.z_match_gap);
            if o.strict_applies {
                strict_n += 1;
                if o.z_tilde_tau >= 1.0 {
                    strict_ok = false;
                }
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "non_honest_certificate",
            &spec,
            model,
            "computed Z-tilde at tau equals the proposition's closed form on every path, strictly below 1 where stated",
        )
        .with_stats(&gap)
        .with_exclusions(outcomes.len(), &ex)
        .detail("max_relative_gap", gap.max())
        .detail("strict_paths", strict_n as f64)
        .detail("tolerance", 1e-12);
        r.verdict = pass_fail(gap.max() <= 1e-12 && strict_ok && gap.n() > 0);
        reports.push(r);
    }

    {
        // exact jump identity (and the exponent arbitration for the convex kind)
        let used: Vec<&Out> = outcomes.iter().filter(|o| o.detected).collect();
        let max_ulp = used.iter().map(|o| o.jump_ulp).fold(0.0, f64::max);
        let mut r = base_report(
            cfg,
            row,
            "jump_identity",
            &spec,
            model,
            "the jump of m equals the displayed strategy times the price jump at machine precision",
        )
        .detail("max_jump_ulp", max_ulp);
        r.n_paths = outcomes.len();
        r.n_used = used.len();
        r.estimate = max_ulp;
        if matches!(spec, RandomTimeSpec::ConvexComboJumps { .. }) {
            let ok12 = used.iter().filter(|o| o.exponent_k12_ulp <= 8.0).count();
            let ok21 = used.iter().filter(|o| o.exponent_k21_ulp <= 8.0).count();
            r = r
                .detail("exponent_k1_over_k2_paths_ok", ok12 as f64)
                .detail("exponent_k2_over_k1_paths_ok", ok21 as f64);
            // report which printed exponent satisfies the identity
            r.claim = format!(
                "{} [exponent check: k1/k2 satisfies the identity on {ok12} of {} paths, k2/k1 on {ok21}]",
                r.claim,
                used.len()
            );
        }
        r.verdict = pass_fail(max_ulp <= 8.0 && !used.is_empty());
        reports.push(r);
    }

    {
        // before-tau wealth, position closed at tau (the stated interval)
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut v_open = Stats::new();
        let mut ident = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        let mut open_floor = f64::INFINITY;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            v.push(o.v_tau);
            v_open.push(o.v_tau_open);
            ident.push(o.identity_gap);
            floor = floor.min(o.v_tau);
            open_floor = open_floor.min(o.v_tau_open);
            if o.v_tau > tol {
                positives += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "before_tau_arbitrage",
            &spec,
            model,
            "wealth of the displayed strategy held on (0, tau] is nonnegative pathwise and positive with positive probability",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_v_tau", floor)
        .detail("mean_v_tau_open", v_open.mean())
        .detail("min_v_tau_open", open_floor)
        .detail("max_identity_gap", ident.max())
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(
            floor >= -tol
                && r.frac_positive_ci_low.unwrap_or(0.0) > 0.0
                && ident.max() <= tol,
        );
        reports.push(r);
    }

    {
        // after-tau delivery recipe
        let mut ex = ExclusionCounts::default();
        let mut v = Stats::new();
        let mut positives = 0usize;
        let mut floor = f64::INFINITY;
        for o in &outcomes {
            if !o.detected {
                ex.bump(Exclusion::UndetectedTau);
                continue;
            }
            if !o.window_realized {
                ex.bump(Exclusion::WindowNotRealized);
                continue;
            }
            v.push(o.recipe_gain);
            floor = floor.min(o.recipe_gain);
            if o.recipe_gain > tol {
                positives += 1;
            }
        }
        let mut r = base_report(
            cfg,
            row,
            "after_tau_recipe",
            &spec,
            model,
            "selling (psi>0) or buying (psi<0) at tau and unwinding before the next structural jump gains on every realized window",
        )
        .with_stats(&v)
        .with_exclusions(outcomes.len(), &ex)
        .with_frac_positive(positives, v.n())
        .detail("min_gain", floor)
        .detail("tolerance", tol);
        r.min_wealth = Some(floor);
        r.verdict = pass_fail(floor > 0.0 && v.n() > 0);
        reports.push(r);
    }

    {
        // deflator before tau (informational for the scaled maximum, whose
        // displayed supermartingale is only sigma(T1 <= t)-measurable)
        let used: Vec<&Out> = outcomes.iter().filter(|o| o.detected).collect();
        let samples: Vec<Vec<f64>> = used.iter().map(|o| o.ls_samples.clone()).collect();
        let positive =
            used.iter().all(|o| o.l_samples.iter().all(|&x| x > 0.0) && o.min_factor > 0.0);
        let z_zero = used.iter().filter(|o| o.z_hit_zero).count();
        let mt = martingale_test(&samples, &sample_times, 3.0)?;
        let informational = matches!(spec, RandomTimeSpec::MaxScaledJumps { .. });
        let mut r = base_report(
            cfg,
            "deflators.nupbr",
            &format!("deflator_before_{kind}"),
            &spec,
            model,
            "the jump-exponential deflator keeps L*S^tau at constant expectation with positive factors",
        )
        .detail("worst_pair_z", mt.worst_z)
        .detail("min_jump_factor", used.iter().map(|o| o.min_factor).fold(f64::INFINITY, f64::min))
        .detail("z_hit_zero_paths", z_zero as f64);
        r.n_paths = outcomes.len();
        r.n_used = used.len();
        r.estimate = mt.worst_z;
        r.verdict = if informational {
            Verdict::Informational
        } else {
            pass_fail(mt.pass && positive && z_zero == 0)
        };
        reports.push(r);
    }

    Ok(reports)
}

// ---------------------------------------------------------------------------
// Full suite
// ---------------------------------------------------------------------------

/// The default verdict battery: every kind at the pinned desk-scale
/// parameters, producing the 13-row table.
pub fn run_full_suite(cfg: &ExperimentConfig) -> Result<Vec<McReport>> {
    let brownian = MarketModel::brownian(1.0)?;
    let poisson_pos = MarketModel::poisson(1.0, 1.0)?;
    let poisson_half = MarketModel::poisson(1.0, 0.5)?;

    let mut reports = Vec::new();
    reports.extend(run_brownian_level(cfg, &brownian, 0.5)?);
    reports.extend(run_brownian_maturity(cfg, &brownian, 0.5)?);
    reports.extend(run_poisson_level(cfg, &poisson_pos, 0.5)?);
    reports.extend(run_poisson_sup(cfg, &poisson_half, true)?);
    reports.extend(run_poisson_sup(cfg, &poisson_half, false)?);
    reports.extend(run_emery(cfg, &brownian)?);
    reports.extend(run_jump_kind(
        cfg,
        &poisson_half,
        RandomTimeSpec::ConvexComboJumps { k1: 0.5, k2: 0.5 },
    )?);
    reports.extend(run_jump_kind(
        cfg,
        &poisson_half,
        RandomTimeSpec::MinScaledJumps { scale: 0.5 },
    )?);
    reports.extend(run_jump_kind(
        cfg,
        &poisson_half,
        RandomTimeSpec::MaxScaledJumps { scale: 0.5 },
    )?);
    Ok(reports)
}

/// Run the configured experiment (single kind or the full battery).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<McReport>> {
    match cfg.suite {
        crate::config::Suite::Full => run_full_suite(cfg),
        crate::config::Suite::Single => {
            let (model, spec) = cfg.model_and_spec()?;
            match spec {
                RandomTimeSpec::BrownianLastPassageLevel { level } => {
                    run_brownian_level(cfg, &model, level)
                }
                RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b } => {
                    run_brownian_maturity(cfg, &model, level_b)
                }
                RandomTimeSpec::EmeryPseudo => run_emery(cfg, &model),
                RandomTimeSpec::PoissonLastPassageLevel { level_b } => {
                    run_poisson_level(cfg, &model, level_b)
                }
                RandomTimeSpec::PoissonSupOnUnit => run_poisson_sup(cfg, &model, true),
                RandomTimeSpec::PoissonSupOverall => run_poisson_sup(cfg, &model, false),
                _ => run_jump_kind(cfg, &model, spec),
            }
        }
    }
}
