//! Analytic special functions behind the closed-form supermartingales.
//!
//! - standard normal CDF/PDF,
//! - the two-sided barrier function
//!   `H(z,y,s) = e^{-zy} N((zs-y)/√s) + e^{zy} N((-zs-y)/√s)` and its
//!   y-derivative (H is the probability that a unit-volatility Brownian
//!   motion with drift ∓z started at distance y hits 0 within s),
//! - the law of the overall supremum of a driftless GBM,
//! - adaptive Simpson quadrature for the pathwise wealth integrals.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Complementary error function for x ≥ 0 (rational minimax approximations
/// in the three classic regimes; relative error below 1e-15 across the
/// double range, which the normal-CDF contract needs).
fn erfc_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let r = if x <= 4.0 {
        const C: [f64; 9] = [
            5.64188496988670089e-1,
            8.88314979438837594e0,
            6.61191906371416295e1,
            2.98635138197400131e2,
            8.81952221241769090e2,
            1.71204761263407058e3,
            2.05107837782607147e3,
            1.23033935479799725e3,
            2.15311535474403846e-8,
        ];
        const D: [f64; 8] = [
            1.57449261107098347e1,
            1.17693950891312499e2,
            5.37181101862009858e2,
            1.62138957456669019e3,
            3.29079923573345963e3,
            4.36261909014324716e3,
            3.43936767414372164e3,
            1.23033935480374942e3,
        ];
        let mut num = C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + C[i]) * x;
            den = (den + D[i]) * x;
        }
        (num + C[7]) / (den + D[7])
    } else {
        // past here even the denormal range is exhausted
        if x > 27.2 {
            return 0.0;
        }
        const P: [f64; 6] = [
            3.05326634961232344e-1,
            3.60344899949804439e-1,
            1.25781726111229246e-1,
            1.60837851487422766e-2,
            6.58749161529837803e-4,
            1.63153871373020978e-2,
        ];
        const Q: [f64; 5] = [
            2.56852019228982242e0,
            1.87295284992346047e0,
            5.27905102951428412e-1,
            6.05183413124413191e-2,
            2.33520497626869185e-3,
        ];
        const INV_SQRT_PI: f64 = 5.641_895_835_477_563e-1;
        let z = 1.0 / (x * x);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        (INV_SQRT_PI - r) / x
    };
    // exp(-x²) split to keep the tail's relative accuracy
    let ysq = (x * 16.0).trunc() / 16.0;
    let del = (x - ysq) * (x + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// erf on |x| ≤ 0.46875.
fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.16112374387056560e0,
        1.13864154151050156e2,
        3.77485237685302021e2,
        3.20937758913846947e3,
        1.85777706184603153e-1,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e1,
        2.44024637934444173e2,
        1.28261652607737228e3,
        2.84423683343917062e3,
    ];
    let z = x * x;
    let mut num = A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + A[i]) * z;
        den = (den + B[i]) * z;
    }
    x * (num + A[3]) / (den + B[3])
}

/// Standard normal CDF.
///
/// Built from `erfc` on the side that avoids cancellation, so that
/// `N(x) + N(-x) = 1` holds exactly and deep tails keep full relative
/// precision (needed by `barrier_h` where tiny N values meet huge `e^{zy}`).
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * erfc_nonneg(-x / SQRT_2)
    } else {
        1.0 - 0.5 * erfc_nonneg(x / SQRT_2)
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `H(z, y, s) = e^{-zy} N((zs-y)/√s) + e^{zy} N((-zs-y)/√s)`, y ≥ 0, s > 0.
pub fn barrier_h(z: f64, y: f64, s: f64) -> Result<f64> {
    check_barrier_args(y, s)?;
    let rs = s.sqrt();
    // e^{zy} N((-zs-y)/√s) written as exp(zy + ln N) to survive y large,
    // where the plain product would overflow before the CDF underflows.
    Ok(exp_times_cdf(-z * y, (z * s - y) / rs) + exp_times_cdf(z * y, (-z * s - y) / rs))
}

/// ∂H/∂y. Differentiating the two CDF terms leaves
/// `-z e^{-zy} N((zs-y)/√s) + z e^{zy} N((-zs-y)/√s) - 2 n₀ / √s`
/// where both density terms collapse to the single
/// `n₀ = exp(-z²s/2 - y²/(2s)) / √(2π)`.
pub fn barrier_h_dy(z: f64, y: f64, s: f64) -> Result<f64> {
    check_barrier_args(y, s)?;
    let rs = s.sqrt();
    let n0 = (-0.5 * z * z * s - 0.5 * y * y / s).exp() / SQRT_2PI;
    Ok(-z * exp_times_cdf(-z * y, (z * s - y) / rs) + z * exp_times_cdf(z * y, (-z * s - y) / rs)
        - 2.0 * n0 / rs)
}

fn check_barrier_args(y: f64, s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("barrier_h needs s > 0, got s={s}")));
    }
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("barrier_h needs y >= 0, got y={y}")));
    }
    Ok(())
}

/// `e^a N(b)` evaluated as `exp(a + ln N(b))` when the plain product would
/// lose the tail. The CDF keeps full relative precision down to b ≈ -36,
/// so the direct product covers everything short of underflow.
fn exp_times_cdf(a: f64, b: f64) -> f64 {
    if b >= -36.0 {
        return a.exp() * normal_cdf(b);
    }
    // ln N(b) for b << 0 via the asymptotic series of Mills' ratio:
    // N(b) = n(b)/|b| (1 - 1/b² + 3/b⁴ - 15/b⁶ + O(b⁻⁸)).
    let b2 = b * b;
    let mills = 1.0 - 1.0 / b2 + 3.0 / (b2 * b2) - 15.0 / (b2 * b2 * b2);
    let ln_n = -0.5 * b2 - SQRT_2PI.ln() - (-b).ln() + mills.ln();
    (a + ln_n).exp()
}

/// Law of the overall supremum of `S_t = exp(σW_t - σ²t/2)`, S₀ = 1:
/// `P(sup_t S_t ≤ x) = (1 - 1/x)⁺` for x > 0 (the sup is 1/U, U uniform).
pub fn brownian_sup_cdf(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("brownian_sup_cdf needs x > 0, got {x}")));
    }
    Ok((1.0 - 1.0 / x).max(0.0))
}

/// Adaptive Simpson quadrature with an absolute tolerance.
///
/// The integrands here are smooth between the breakpoints the callers split
/// at, so the classic 15× error estimate is reliable.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    // width guard: an isolated discontinuity pins refinement to a point whose
    // residual contribution is bounded by width * jump size
    if err.abs() <= 15.0 * tol || (b - a).abs() < 1e-12 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive quadrature failed on [{a}, {b}]: residual {:.3e} above tolerance {tol:.3e}",
            err.abs()
        )));
    }
    let half_tol = (0.5 * tol).max(1e-18);
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // erf-based reference evaluation
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
        assert!((normal_cdf(40.0) - 1.0).abs() < 1e-15);
        // deep tail keeps relative precision down to the denormal floor
        assert!(normal_cdf(-37.0) > 0.0);
        assert!((normal_cdf(-37.0) / 5.725571222524577e-300 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_cdf_symmetry_is_exact() {
        for &x in &[0.0, 0.1, 0.5, 1.0, 2.3, 7.7, 11.0, 33.0] {
            assert_eq!(normal_cdf(x) + normal_cdf(-x), 1.0, "x={x}");
        }
    }

    #[test]
    fn barrier_h_collapses_at_y_zero() {
        // H(z,0,s) = N(z√s) + N(-z√s) = 1
        for &z in &[-2.0, -0.5, 0.0, 0.5, 2.0] {
            for &s in &[0.1, 1.0, 10.0] {
                assert_eq!(barrier_h(z, 0.0, s).unwrap(), 1.0, "z={z} s={s}");
            }
        }
    }

    #[test]
    fn barrier_h_at_z_zero_is_two_sided_tail() {
        for &y in &[0.2, 1.0, 3.0] {
            for &s in &[0.5, 1.0, 4.0] {
                let h = barrier_h(0.0, y, s).unwrap();
                let expect = 2.0 * normal_cdf(-y / s.sqrt());
                assert!((h - expect).abs() < 1e-15, "y={y} s={s}");
            }
        }
    }

    #[test]
    fn barrier_h_large_s_asymptote() {
        // For z > 0 and s large the first term tends to e^{-zy}, the second to 0.
        for &(z, y) in &[(0.5, 1.0), (1.0, 2.0), (0.25, 0.7)] {
            let h = barrier_h(z, y, 1e8).unwrap();
            assert!(
                (h - (-z * y).exp()).abs() < 1e-8,
                "z={z} y={y} h={h} vs {}",
                (-z * y).exp()
            );
        }
    }

    #[test]
    fn barrier_h_rejects_bad_domain() {
        assert!(barrier_h(0.3, 1.0, 0.0).is_err());
        assert!(barrier_h(0.3, 1.0, -1.0).is_err());
        assert!(barrier_h(0.3, -0.1, 1.0).is_err());
        assert!(barrier_h_dy(0.3, 1.0, 0.0).is_err());
    }

    #[test]
    fn barrier_h_dy_z_zero_closed_form() {
        for &y in &[0.3, 1.0, 2.5] {
            for &s in &[0.25, 1.0, 9.0] {
                let d = barrier_h_dy(0.0, y, s).unwrap();
                let expect = -2.0 / s.sqrt() * normal_pdf(y / s.sqrt());
                assert!((d - expect).abs() < 1e-14, "y={y} s={s}");
            }
        }
    }

    fn fd_dy(z: f64, y: f64, s: f64, h: f64) -> f64 {
        (barrier_h(z, y + h, s).unwrap() - barrier_h(z, (y - h).max(0.0), s).unwrap())
            / (h + (y - (y - h).max(0.0)))
    }

    #[test]
    fn barrier_h_dy_matches_finite_differences_on_grid() {
        // 20x20x5 grid of (z, y, s); central differences with step 1e-6.
        let zs: Vec<f64> = (0..20).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / 20.0).collect();
        let ys: Vec<f64> = (0..20).map(|i| 0.05 + 3.0 * i as f64 / 19.0).collect();
        let ss = [0.1, 0.5, 1.0, 2.0, 8.0];
        for &z in &zs {
            for &y in &ys {
                for &s in &ss {
                    let ana = barrier_h_dy(z, y, s).unwrap();
                    let fd = fd_dy(z, y, s, 1e-6);
                    let scale = ana.abs().max(1e-3);
                    assert!(
                        ((ana - fd) / scale).abs() <= 1e-5,
                        "z={z} y={y} s={s}: analytic {ana} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn barrier_h_dy_one_sided_at_zero() {
        for &z in &[-1.0, 0.5, 1.5] {
            let s = 1.3;
            let ana = barrier_h_dy(z, 0.0, s).unwrap();
            let h = 1e-7;
            let fd = (barrier_h(z, h, s).unwrap() - barrier_h(z, 0.0, s).unwrap()) / h;
            assert!((ana - fd).abs() < 1e-5, "z={z}: {ana} vs {fd}");
        }
    }

    #[test]
    fn sup_cdf_values() {
        assert_eq!(brownian_sup_cdf(1.0).unwrap(), 0.0);
        assert_eq!(brownian_sup_cdf(2.0).unwrap(), 0.5);
        assert_eq!(brownian_sup_cdf(0.5).unwrap(), 0.0);
        assert!(brownian_sup_cdf(0.0).is_err());
        assert!(brownian_sup_cdf(-1.0).is_err());
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| (4.0 * x).sin(), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (1.0 - (8f64).cos()) / 4.0).abs() < 1e-11);
    }
}
