//! Ruin probability of the drifted count `Y_t = μt - N_t` with unit jumps.
//!
//! `Ψ(x) = P(inf_t (x + Y_t) < 0)` for x ≥ 0, under the net-profit condition
//! θ = μ/λ - 1 > 0. By the Pollaczek–Khinchine formula the maximal aggregate
//! loss is a geometric(ρ) compound of iid uniforms (the integrated tail of a
//! deterministic unit claim is `F_I(x) = min(x,1)`, i.e. U[0,1]), ρ = 1/(1+θ):
//!
//! `Ψ(x) = (1-ρ) Σ_{n≥1} ρⁿ P(U₁+…+Uₙ > x)`.
//!
//! Each convolution power is an Irwin–Hall law; its density is accumulated
//! here as a piecewise polynomial in local coordinates per unit interval,
//! built by recursive integration (which is exact for polynomials and avoids
//! the catastrophic cancellation of the closed-form alternating sum). Ψ is the
//! right tail integral of the accumulated density plus the exact geometric
//! remainder at 0, so `Ψ(0) = 1/(1+θ)` holds to machine precision.

use crate::error::{Error, Result};

/// Hard cap on the number of geometric terms; reached only for θ ≲ 0.015,
/// far below the desk-scale loadings the Poisson examples use.
const MAX_TERMS: usize = 2000;

/// Piecewise-polynomial representation of Ψ on `[0, n_terms]`,
/// constant `tail_floor` beyond.
#[derive(Debug, Clone)]
pub struct RuinProbTable {
    pub theta: f64,
    pub rho: f64,
    /// Series truncation bound: 0 ≤ Ψ_true - Ψ_table + tail_floor ≤ truncation_error.
    pub truncation_error: f64,
    /// Density pieces: `h[j]` are local-coordinate coefficients of the
    /// compound density on `[j, j+1)`.
    pieces: Vec<Vec<f64>>,
    /// `suffix[j] = ∫_j^∞ h + tail_floor`; `suffix[n_pieces] = tail_floor`.
    suffix: Vec<f64>,
    /// Exact geometric remainder ρ^{N+1} assigned to the far tail.
    tail_floor: f64,
}

impl RuinProbTable {
    /// Build the table for safety loading θ > 0.
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "ruin probability needs net profit theta > 0, got {theta}"
            )));
        }
        let rho = 1.0 / (1.0 + theta);
        // rho^(N+1)/(1-rho) <= 1e-10 and rho^(N+1) <= 1e-13
        let n_from = |bound: f64| -> usize { (bound.ln() / rho.ln()).ceil() as usize };
        let n_terms = n_from(1e-10 * (1.0 - rho)).max(n_from(1e-13)).min(MAX_TERMS);
        let tail_floor = rho.powi(n_terms as i32 + 1);

        // f_1 = U[0,1] density; recursively f_{k+1}(j+u) = ∫_0^u f_k(j+·) + ∫_u^1 f_k(j-1+·).
        let mut fk: Vec<Vec<f64>> = vec![vec![1.0]];
        let mut pieces: Vec<Vec<f64>> = Vec::with_capacity(n_terms);
        let scale0 = 1.0 - rho;
        let mut rho_n = rho;
        accumulate(&mut pieces, &fk, scale0 * rho_n);
        for _ in 1..n_terms {
            fk = convolve_with_uniform(&fk);
            rho_n *= rho;
            accumulate(&mut pieces, &fk, scale0 * rho_n);
        }

        //

        let mut suffix = vec![tail_floor; pieces.len() + 1];
        for j in (0..pieces.len()).rev() {
            suffix[j] = suffix[j + 1] + poly_integral01(&pieces[j]);
        }

        Ok(RuinProbTable { theta, rho, truncation_error: tail_floor, pieces, suffix, tail_floor })
    }

    /// Ψ(x) for x ≥ 0.
    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("ruin probability needs x >= 0, got {x}")));
        }
        Ok(self.psi_unchecked(x))
    }

    #[inline]
    pub fn psi_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.rho;
        }
        let j = x.floor() as usize;
        if j >= self.pieces.len() {
            return self.tail_floor;
        }
        let u = x - j as f64;
        // Psi(j+u) = suffix[j] - int_0^u h_j
        self.suffix[j] - poly_integral_to(&self.pieces[j], u)
    }

    /// Exact ∫_a^b Ψ(x) dx (a, b ≥ 0). Used by the pathwise wealth
    /// integrator, where the drift integrand is affine in Ψ.
    pub fn psi_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::Domain(format!("psi_integral needs a,b >= 0, got [{a}, {b}]")));
        }
        if b < a {
            return Ok(-self.psi_integral(b, a)?);
        }
        let mut total = 0.0;
        let mut x = a;
        while x < b {
            let j = x.floor() as usize;
            let right = ((j + 1) as f64).min(b);
            let (u0, u1) = (x - j as f64, right - j as f64);
            if j >= self.pieces.len() {
                total += self.tail_floor * (b - x);
                break;
            }
            // ∫ (suffix[j] - H_j(u)) du with H_j the running integral of h_j
            let anti = poly_antiderivative(&self.pieces[j]);
            total += self.suffix[j] * (u1 - u0)
                - (poly_integral_to(&anti, u1) - poly_integral_to(&anti, u0));
            x = right;
        }
        Ok(total)
    }

    /// Density of the maximal aggregate loss: -Ψ'(x) for x > 0.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let j = x.floor() as usize;
        if j >= self.pieces.len() {
            return 0.0;
        }
        poly_eval(&self.pieces[j], x - j as f64)
    }

    /// Smallest x with Ψ(x) ≤ p (Ψ is non-increasing); errors if p below the
    /// table floor.
    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("inverse needs p in (0,1], got {p}")));
        }
        if p >= self.rho {
            return Ok(0.0);
        }
        if p <= self.tail_floor {
            return Err(Error::Numerical(format!(
                "inverse target {p:.3e} at or below series floor {:.3e}",
                self.tail_floor
            )));
        }
        let (mut lo, mut hi) = (0.0, self.pieces.len() as f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.psi_unchecked(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn n_terms(&self) -> usize {
        self.pieces.len()
    }
}

/// One convolution with U[0,1] in local coordinates.
fn convolve_with_uniform(f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = f.len();
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        // g_j(u) = ∫_0^u f_j(w) dw + ∫_u^1 f_{j-1}(w) dw
        let deg = f.first().map_or(0, |p| p.len()) + 1;
        let mut g = vec![0.0; deg];
        if j < n {
            let a = poly_antiderivative(&f[j]);
            for (k, c) in a.iter().enumerate() {
                g[k] += c;
            }
        }
        if j > 0 {
            let a = poly_antiderivative(&f[j - 1]);
            let full = poly_eval(&a, 1.0);
            g[0] += full;
            for (k, c) in a.iter().enumerate() {
                g[k] -= c;
            }
        }
        out.push(g);
    }
    out
}

fn accumulate(pieces: &mut Vec<Vec<f64>>, f: &[Vec<f64>], w: f64) {
    while pieces.len() < f.len() {
        pieces.push(Vec::new());
    }
    for (piece, poly) in pieces.iter_mut().zip(f.iter()) {
        if piece.len() < poly.len() {
            piece.resize(poly.len(), 0.0);
        }
        for (c, p) in piece.iter_mut().zip(poly.iter()) {
            *c += w * p;
        }
    }
}

fn poly_eval(p: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for &c in p.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

/// Coefficients of ∫_0^u p (constant term zero).
fn poly_antiderivative(p: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        a[k + 1] = c / (k + 1) as f64;
    }
    a
}

fn poly_integral_to(p: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in p.iter().enumerate().rev() {
        acc = acc * u + c / (k + 1) as f64;
    }
    acc * u
}

fn poly_integral01(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_at_zero_is_one_over_one_plus_theta() {
        for &theta in &[0.05, 0.2, 0.4427, 1.0, 3.0] {
            let t = RuinProbTable::new(theta).unwrap();
            assert!(
                (t.psi(0.0).unwrap() - 1.0 / (1.0 + theta)).abs() <= 1e-12,
                "theta={theta}"
            );
        }
    }

    #[test]
    fn rejects_non_positive_loading() {
        assert!(RuinProbTable::new(0.0).is_err());
        assert!(RuinProbTable::new(-0.3).is_err());
    }

    #[test]
    fn monotone_decreasing_to_zero() {
        let t = RuinProbTable::new(0.4427).unwrap();
        let mut prev = t.psi(0.0).unwrap();
        assert!(prev <= 1.0 && prev > 0.0);
        let mut x = 0.0;
        while x < t.n_terms() as f64 + 2.0 {
            x += 0.0973;
            let p = t.psi(x).unwrap();
            assert!(p <= prev + 1e-15, "x={x}");
            assert!(p > 0.0 && p <= 1.0);
            prev = p;
        }
        assert!(t.psi(1e6).unwrap() <= 2.0 * t.truncation_error);
    }

    #[test]
    fn irwin_hall_cross_check_small_orders() {
        // P(U1+U2 > x) and P(U1+U2+U3 > x) in closed form vs the table built
        // with rho chosen so individual terms can be extracted is awkward;
        // instead check the full series against a direct evaluation with the
        // alternating Irwin-Hall formula, which is stable for small n.
        let theta = 1.0; // rho = 1/2, series converges fast
        let t = RuinProbTable::new(theta).unwrap();
        let rho: f64 = 0.5;
        for &x in &[0.25, 0.5, 1.0, 1.75, 2.5, 3.3] {
            let mut direct = 0.0;
            let mut rn = 1.0;
            for n in 1..=40usize {
                rn *= rho;
                direct += (1.0 - rho) * rn * (1.0 - irwin_hall_cdf(n, x));
            }
            assert!(
                (t.psi(x).unwrap() - direct).abs() < 1e-11,
                "x={x}: table {} vs direct {direct}",
                t.psi(x).unwrap()
            );
        }
    }

    fn irwin_hall_cdf(n: usize, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= n as f64 {
            return 1.0;
        }
        let mut acc = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 1..=n {
            fact *= k as f64;
        }
        for k in 0..=(x.floor() as usize) {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * (x - k as f64).powi(n as i32);
        }
        acc / fact
    }

    #[test]
    fn renewal_ode_identity() {
        // mu Psi'(x) = lambda [Psi(x) - Psi(x-1) 1_{x>=1} - 1_{x<1}] with
        // Psi' = -density; this ties the whole construction to the ruin ODE.
        let lambda = 1.0;
        for &psi_jump in &[0.5, 1.0, 2.0] {
            let alpha = (1.0f64 + psi_jump).ln();
            let mu = lambda * psi_jump / alpha;
            let theta = mu / lambda - 1.0;
            let t = RuinProbTable::new(theta).unwrap();
            for &x in &[0.1, 0.7, 1.3, 2.6, 4.9, 7.4] {
                let lhs = -mu * t.density(x);
                let prev = if x >= 1.0 { t.psi(x - 1.0).unwrap() } else { 1.0 };
                let rhs = lambda * (t.psi(x).unwrap() - prev);
                assert!((lhs - rhs).abs() < 1e-10, "psi={psi_jump} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let t = RuinProbTable::new(0.4427).unwrap();
        let quad = crate::special::adaptive_simpson(&|x| t.psi_unchecked(x), 0.3, 4.7, 1e-12)
            .unwrap();
        let exact = t.psi_integral(0.3, 4.7).unwrap();
        assert!((quad - exact).abs() < 1e-9, "{quad} vs {exact}");
        assert_eq!(t.psi_integral(2.0, 1.0).unwrap(), -t.psi_integral(1.0, 2.0).unwrap());
    }

    #[test]
    fn inverse_round_trip() {
        let t = RuinProbTable::new(0.4427).unwrap();
        for &p in &[0.3, 0.1, 0.01, 1e-6] {
            let x = t.inverse(p).unwrap();
            assert!((t.psi(x).unwrap() - p).abs() < 1e-9, "p={p}");
        }
        assert_eq!(t.inverse(0.9).unwrap(), 0.0);
    }
}
