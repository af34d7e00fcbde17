//! NUPBR deflators before τ and after an honest τ with Z_τ < 1.
//!
//! Poisson filtration: `L = E(-ν̂/(Z₋+ν̂)·M̂)` before τ and
//! `L = E(ν̂/(1-Z₋-ν̂) 1_{]]τ,∞[[}·M̂)` after, where `M̂` is the
//! Jeulin-compensated jump martingale. Between jumps the exponential's
//! drift collapses to `exp(±λ∫ ν̂/Z₋ ds)` (the (Z₋+ν̂) factors cancel
//! against the compensator), which stays finite even where a hypothetical
//! jump would kill Z. Jump factors are evaluated exactly and must stay
//! positive; a non-positive factor is reported as an invariant violation,
//! never clamped.
//!
//! Continuous filtration: `dL = -(L/Z) dm̂` integrates to
//! `L = exp(-∫(1/Z)dm + ½∫(1/Z²)d⟨m⟩)` on the grid.

use crate::azema::AzemaBundle;
use crate::error::{Error, Result};
use crate::path::{BrownianPath, PoissonPath};
use crate::special::adaptive_simpson;
use crate::times::RandomTimeSpec;

/// L and the deflated process sampled at the requested times.
#[derive(Debug, Clone)]
pub struct DeflatorRun {
    pub l: Vec<f64>,
    pub deflated: Vec<f64>,
    /// Smallest stochastic-exponential jump factor encountered (1 if none).
    pub min_jump_factor: f64,
    /// Largest |κΔm̂| condition value; the paper's positivity conditions
    /// require ν̂/(Z₋+ν̂) < 1 before τ and (ν̂/(1-Z₋-ν̂))ΔN > -1 after.
    pub z_hit_zero: bool,
}

/// Left limit of Z for any Poisson kind.
fn z_left(bundle: &AzemaBundle<'_>, path: &PoissonPath, t: f64) -> Result<f64> {
    Ok(bundle.poisson_z_left(path, t)?.v)
}

/// ∫_{t0}^{t1} ν̂(s)/Z_{s-} ds between jumps (closed forms per kind,
/// quadrature otherwise).
///
/// Where a hypothetical jump would land on {Z̃ = 0}, the denominator
/// (Z₋ + ν̂ before τ, 1 − Z₋ − ν̂ after) vanishes together with the jump
/// compensator of M̂: on such stretches the enlarged filtration admits no
/// jumps at all, dM̂ ≡ 0, and the literal stochastic exponential is
/// constant — the integrand contributes 0. The price still drifts
/// deterministically there, so no positive local martingale can flatten
/// the deflated process on those stretches; the constant-expectation test
/// reports exactly that.
fn drift_ratio_integral(
    bundle: &AzemaBundle<'_>,
    path: &PoissonPath,
    t0: f64,
    t1: f64,
    after_tau: bool,
) -> Result<f64> {
    if t1 <= t0 {
        return Ok(0.0);
    }
    use RandomTimeSpec::*;
    if !after_tau {
        match bundle.spec {
            ConvexComboJumps { .. } => {
                // (T1, T2] is a degenerate stretch: no jump can precede tau,
                // dM-hat vanishes and the exponential is flat throughout
                return Ok(0.0);
            }
            MinScaledJumps { scale } => {
                // optional integrand: -βs e^{-βs} / (e^{-βs}(βs+1)) = -βs/(βs+1)
                let beta = bundle.model.lambda * (1.0 / scale - 1.0);
                let j0 = path.jumps.first().copied().unwrap_or(f64::INFINITY);
                let hi = t1.min(j0);
                if hi <= t0 {
                    return Ok(0.0);
                }
                let anti = |u: f64| -(u - (1.0 + beta * u).ln() / beta);
                return Ok(anti(hi) - anti(t0));
            }
            _ => {}
        }
    }
    // generic route: piecewise-smooth between jumps and indicator flips;
    // the left endpoint is nudged inward so the measure-zero boundary state
    // (a visit time, where the left limit of Z differs) is never sampled
    let mut total = 0.0;
    let mut lo = t0 + 1e-11 * (1.0 + t0.abs());
    for hi in bundle.quadrature_cells(path, t0, t1) {
        if hi <= lo {
            continue;
        }
        let f = |s: f64| -> f64 {
            let nu = match bundle.poisson_nu_hat_deflator(path, s) {
                Ok(v) => v.v,
                Err(_) => return f64::NAN,
            };
            let z = z_left(bundle, path, s).unwrap_or(f64::NAN);
            if nu == 0.0 {
                return 0.0;
            }
            if after_tau {
                if (1.0 - z - nu).abs() <= 1e-10 {
                    return 0.0;
                }
                nu / (1.0 - z)
            } else {
                if (z + nu).abs() <= 1e-10 {
                    return 0.0;
                }
                nu / z
            }
        };
        total += adaptive_simpson(&f, lo, hi, 1e-9)?;
        lo = hi;
    }
    Ok(total)
}

/// Deflator for the stopped market S^τ in the Poisson filtration.
pub fn poisson_deflator_before(
    bundle: &AzemaBundle<'_>,
    path: &PoissonPath,
    tau: f64,
    sample_times: &[f64],
) -> Result<DeflatorRun> {
    let mut l = Vec::with_capacity(sample_times.len());
    let mut deflated = Vec::with_capacity(sample_times.len());
    let mut min_factor = f64::INFINITY;
    let mut z_hit_zero = false;

    let mut ln_l = 0.0;
    let mut cur = 0.0;
    let mut jump_iter = path.jumps.iter().copied().peekable();
    for &t in sample_times {
        let t_eff = t.min(tau);
        if t_eff > cur {
            // advance through jumps in (cur, t_eff]
            while let Some(&tj) = jump_iter.peek() {
                if tj > t_eff || tj > tau {
                    break;
                }
                jump_iter.next();
                ln_l += bundle.model.lambda * drift_ratio_integral(bundle, path, cur, tj, false)?;
                let z_minus = z_left(bundle, path, tj)?;
                let nu = bundle.poisson_nu_hat_deflator(path, tj)?.v;
                let denom = z_minus + nu;
                if denom <= 0.0 || z_minus <= 0.0 {
                    z_hit_zero = true;
                } else {
                    let factor = z_minus / denom;
                    min_factor = min_factor.min(factor);
                    ln_l += factor.ln();
                }
                cur = tj;
            }
            ln_l += bundle.model.lambda * drift_ratio_integral(bundle, path, cur, t_eff, false)?;
            cur = t_eff;
        }
        let lv = ln_l.exp();
        l.push(lv);
        deflated.push(lv * path.s_at(t.min(tau)));
    }
    Ok(DeflatorRun {
        l,
        deflated,
        min_jump_factor: if min_factor.is_finite() { min_factor } else { 1.0 },
        z_hit_zero,
    })
}

/// Deflator for S − S^τ after an honest τ with Z_τ < 1 (the Poisson
/// last-passage kind is the closed-form case satisfying the gate).
pub fn poisson_deflator_after(
    bundle: &AzemaBundle<'_>,
    path: &PoissonPath,
    tau: f64,
    sample_times: &[f64],
) -> Result<DeflatorRun> {
    if !bundle.spec.is_honest() {
        return Err(Error::Contract("after-τ deflators need an honest time".into()));
    }
    // runtime gate: Z_tau < 1
    let z_tau = bundle.z(&crate::SamplePath::Poisson(path.clone()), tau)?.v;
    if z_tau >= 1.0 {
        return Err(Error::Contract(format!("after-τ deflator needs Z_tau < 1, got {z_tau}")));
    }
    let mut l = Vec::with_capacity(sample_times.len());
    let mut deflated = Vec::with_capacity(sample_times.len());
    let mut min_factor = f64::INFINITY;
    let mut z_hit_zero = false;

    let mut ln_l = 0.0;
    let mut cur = tau;
    let mut jump_iter =
        path.jumps.iter().copied().filter(|&x| x > tau).peekable();
    for &t in sample_times {
        if t > cur {
            while let Some(&tj) = jump_iter.peek() {
                if tj > t {
                    break;
                }
                jump_iter.next();
                ln_l -= bundle.model.lambda * drift_ratio_integral(bundle, path, cur, tj, true)?;
                let z_minus = z_left(bundle, path, tj)?;
                let nu = bundle.poisson_nu_hat_deflator(path, tj)?.v;
                let denom = 1.0 - z_minus - nu;
                if denom <= 0.0 || z_minus >= 1.0 {
                    z_hit_zero = true;
                } else {
                    let factor = (1.0 - z_minus) / denom;
                    min_factor = min_factor.min(factor);
                    ln_l += factor.ln();
                }
                cur = tj;
            }
            if t > cur {
                ln_l -= bundle.model.lambda * drift_ratio_integral(bundle, path, cur, t, true)?;
                cur = t;
            }
        }
        let lv = if t <= tau { 1.0 } else { ln_l.exp() };
        l.push(lv);
        deflated.push(lv * (path.s_at(t) - path.s_at(t.min(tau))));
    }
    Ok(DeflatorRun {
        l,
        deflated,
        min_jump_factor: if min_factor.is_finite() { min_factor } else { 1.0 },
        z_hit_zero,
    })
}

/// Continuous-filtration deflator `L = exp(-∫(1/Z)dm + ½∫(1/Z²)d⟨m⟩)`
/// for S^τ, sampled at grid indices.
pub fn brownian_deflator_before(
    bundle: &AzemaBundle<'_>,
    path: &BrownianPath,
    i_tau: usize,
    sample_idx: &[usize],
) -> Result<DeflatorRun> {
    use RandomTimeSpec::*;
    let sigma = bundle.model.sigma;
    let mut l = Vec::with_capacity(sample_idx.len());
    let mut deflated = Vec::with_capacity(sample_idx.len());
    let mut ln_l = 0.0;
    let mut cur = 0usize;
    let mut z_hit_zero = false;
    for &idx in sample_idx {
        let stop = idx.min(i_tau);
        while cur < stop {
            match bundle.spec {
                BrownianLastPassageLevel { level } => {
                    // c/Z = σ 1_{S<a} exactly: the deflator only sees the
                    // region below the level
                    if path.ln_s[cur] < level.ln() {
                        ln_l += -sigma * path.dw[cur] + 0.5 * sigma * sigma * path.dt;
                    }
                }
                EmeryPseudo => {} // m ≡ 1, L ≡ 1
                BrownianLastPassageBeforeMaturity { .. } => {
                    let t = path.t(cur);
                    let z = bundle
                        .z(&crate::SamplePath::Brownian(path.clone()), t)
                        .map(|v| v.v)?;
                    if z <= 1e-12 {
                        z_hit_zero = true;
                    } else {
                        let c = bundle.brownian_dm_coeff(path, cur, t)?;
                        ln_l += -(c / z) * path.dw[cur] + 0.5 * (c / z).powi(2) * path.dt;
                    }
                }
                _ => return Err(Error::Contract("not a Brownian kind".into())),
            }
            cur += 1;
        }
        let lv = ln_l.exp();
        l.push(lv);
        deflated.push(lv * path.s(idx.min(i_tau)));
    }
    Ok(DeflatorRun { l, deflated, min_jump_factor: 1.0, z_hit_zero })
}

/// Jeulin-compensated version of an F-martingale along a Poisson path:
/// `X̂_t = X_{t∧τ} − ∫₀^{t∧τ} d⟨X,m⟩/Z₋` (before) and the two-regime
/// decomposition with `+∫_{t∧τ}^t d⟨X,m⟩/(1−Z₋)` after an honest τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GHatProcess {
    Price,
    AzemaMartingale,
    CompensatedJump,
}

pub fn g_hat_poisson(
    bundle: &AzemaBundle<'_>,
    path: &PoissonPath,
    tau: f64,
    process: GHatProcess,
    sample_times: &[f64],
    include_after: bool,
) -> Result<Vec<f64>> {
    let lam = bundle.model.lambda;
    let sp = crate::SamplePath::Poisson(path.clone());
    let x_at = |t: f64| -> Result<f64> {
        Ok(match process {
            GHatProcess::Price => path.s_at(t),
            GHatProcess::AzemaMartingale => bundle.m(&sp, t)?.v,
            GHatProcess::CompensatedJump => path.n_at(t) as f64 - lam * t,
        })
    };
    // d<X,m>/dt = λ ν̂ · (jump of X per unit jump of N)
    let bracket_rate = |s: f64| -> f64 {
        let nu = match bundle.poisson_nu_hat(path, s) {
            Ok(v) => v.v,
            Err(_) => return f64::NAN,
        };
        let dx = match process {
            GHatProcess::Price => path.psi * path.s_pre(s),
            GHatProcess::AzemaMartingale => nu,
            GHatProcess::CompensatedJump => 1.0,
        };
        lam * nu * dx
    };
    let mut out = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let before_end = t.min(tau);
        let mut comp = 0.0;
        let mut lo = 0.0;
        for hi in bundle.quadrature_cells(path, 0.0, before_end) {
            if hi <= lo {
                continue;
            }
            let f = |s: f64| {
                let z = z_left(bundle, path, s).unwrap_or(f64::NAN);
                bracket_rate(s) / z
            };
            comp += adaptive_simpson(&f, lo, hi, 1e-9)?;
            lo = hi;
        }
        let mut v = x_at(before_end)? - comp;
        if include_after && t > tau {
            let mut lo = tau + 1e-11 * (1.0 + tau.abs());
            let mut after_comp = 0.0;
            for hi in bundle.quadrature_cells(path, tau, t) {
                if hi <= lo {
                    continue;
                }
                let f = |s: f64| {
                    let z = z_left(bundle, path, s).unwrap_or(f64::NAN);
                    let d = 1.0 - z;
                    if d.abs() <= 1e-10 {
                        return 0.0;
                    }
                    bracket_rate(s) / d
                };
                after_comp += adaptive_simpson(&f, lo, hi, 1e-9)?;
                lo = hi;
            }
            v = x_at(t)? - comp + after_comp;
        }
        out.push(v);
    }
    Ok(out)
}

/// Constant-expectation test over a time grid: for every pair of grid times
/// the paired mean difference must sit within `tol_sigmas` standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    pub worst_pair: (usize, usize),
    pub worst_z: f64,
    pub pass: bool,
}

pub fn martingale_test(
    samples: &[Vec<f64>],
    times: &[f64],
    tol_sigmas: f64,
) -> Result<MartingaleReport> {
    let nt = times.len();
    if nt < 2 {
        return Err(Error::Contract("martingale test needs at least 2 grid times".into()));
    }
    let n = samples.len();
    if n < 1000 {
        return Err(Error::Contract(format!("martingale test needs >= 1000 paths, got {n}")));
    }
    let mut means = vec![0.0; nt];
    let mut ses = vec![0.0; nt];
    for j in 0..nt {
        let mut s = crate::report::Stats::new();
        for row in samples {
            s.push(row[j]);
        }
        means[j] = s.mean();
        ses[j] = s.se();
    }
    let mut worst_z = 0.0;
    let mut worst_pair = (0, 1);
    for i in 0..nt {
        for j in i + 1..nt {
            let mut d = crate::report::Stats::new();
            for row in samples {
                d.push(row[j] - row[i]);
            }
            let se = d.se().max(1e-300);
            let z = d.mean().abs() / se;
            if z > worst_z {
                worst_z = z;
                worst_pair = (i, j);
            }
        }
    }
    Ok(MartingaleReport {
        times: times.to_vec(),
        means,
        ses,
        worst_pair,
        worst_z,
        pass: worst_z <= tol_sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketModel;
    use crate::path::simulate_poisson;
    use crate::ruin::RuinProbTable;
    use crate::times::realize;

    #[test]
    fn deflator_starts_at_one_and_stays_positive() {
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let ruin = RuinProbTable::new(model.theta()).unwrap();
        let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 };
        let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
        for idx in 0..40 {
            let p = simulate_poisson(&model, 40.0, 3, idx).unwrap();
            let sp = crate::SamplePath::Poisson(p.clone());
            let r = realize(&spec, &sp).unwrap();
            if !r.detected {
                continue;
            }
            let times = [0.0, 1.0, 3.0, 7.0, 15.0, 40.0];
            let run = poisson_deflator_before(&bundle, &p, r.tau, &times).unwrap();
            assert_eq!(run.l[0], 1.0);
            assert!(!run.z_hit_zero);
            assert!(run.min_jump_factor > 0.0);
            for &lv in &run.l {
                assert!(lv > 0.0);
            }
        }
    }

    #[test]
    fn pseudo_stopping_kind_has_unit_deflator() {
        // with m ≡ 1 the integrand vanishes identically: test the Poisson
        // machinery on the convex kind restricted before T1 where nu = 0
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let spec = RandomTimeSpec::ConvexComboJumps { k1: 0.5, k2: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        let p = simulate_poisson(&model, 20.0, 8, 1).unwrap();
        if p.jumps.is_empty() {
            return;
        }
        let t1 = p.jumps[0];
        let run =
            poisson_deflator_before(&bundle, &p, t1 * 0.99, &[0.0, t1 * 0.5, t1 * 0.99]).unwrap();
        for &lv in &run.l {
            assert_eq!(lv, 1.0);
        }
    }

    #[test]
    fn min_scaled_deflator_survives_the_stopped_jump() {
        // at tau = T1 the optional integrand keeps Z- + nu = e^{-beta t} > 0
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let spec = RandomTimeSpec::MinScaledJumps { scale: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        for idx in 0..60 {
            let p = simulate_poisson(&model, 20.0, 9, idx).unwrap();
            let sp = crate::SamplePath::Poisson(p.clone());
            let r = realize(&spec, &sp).unwrap();
            if !r.detected {
                continue;
            }
            let run = poisson_deflator_before(&bundle, &p, r.tau, &[r.tau]).unwrap();
            assert!(!run.z_hit_zero, "idx={idx}");
            assert!(run.min_jump_factor > 0.0);
            if !p.jumps.is_empty() && p.jumps[0] <= r.tau {
                // the jump factor at T1 is 1 + beta*T1
                let beta = 1.0;
                let expect = 1.0 + beta * p.jumps[0];
                assert!(
                    (run.min_jump_factor - expect).abs() < 1e-12,
                    "factor {} vs {expect}",
                    run.min_jump_factor
                );
            }
        }
    }

    #[test]
    fn after_deflator_gate_and_factors() {
        let model = MarketModel::poisson(1.0, 1.0).unwrap();
        let ruin = RuinProbTable::new(model.theta()).unwrap();
        let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 };
        let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
        let mut tested = 0;
        for idx in 0..60 {
            let p = simulate_poisson(&model, 60.0, 31, idx).unwrap();
            let sp = crate::SamplePath::Poisson(p.clone());
            let r = realize(&spec, &sp).unwrap();
            if !r.detected {
                continue;
            }
            let times = [r.tau, r.tau + 1.0, r.tau + 5.0, 60.0];
            let run = poisson_deflator_after(&bundle, &p, r.tau, &times).unwrap();
            assert_eq!(run.l[0], 1.0);
            assert_eq!(run.deflated[0], 0.0);
            assert!(run.min_jump_factor > 0.0, "idx={idx}");
            assert!(!run.z_hit_zero);
            tested += 1;
        }
        assert!(tested > 30);
        // non-honest kind is rejected
        let spec = RandomTimeSpec::MinScaledJumps { scale: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        let p = simulate_poisson(&model, 10.0, 1, 1).unwrap();
        assert!(poisson_deflator_after(&bundle, &p, 1.0, &[2.0]).is_err());
    }

    #[test]
    fn martingale_test_on_constant_process_passes() {
        let samples: Vec<Vec<f64>> = (0..2000).map(|i| vec![i as f64; 4]).collect();
        let r = martingale_test(&samples, &[0.0, 1.0, 2.0, 3.0], 3.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_z, 0.0);
        assert!(martingale_test(&samples, &[0.0], 3.0).is_err());
        assert!(martingale_test(&samples[..10], &[0.0, 1.0], 3.0).is_err());
    }
}
