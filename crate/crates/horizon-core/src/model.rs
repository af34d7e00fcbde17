//! Market models: geometric Brownian motion and the geometric Poisson price.
//!
//! Brownian: `dS = σ S dW`, so `S_t = S₀ exp(σW_t − σ²t/2)`.
//! Poisson: `dS = ψ S₋ dM` with `M_t = N_t − λt`, so
//! `S_t = S₀ exp(−λψt + ln(1+ψ) N_t)`.  The drifted count
//! `Y_t = μt − N_t` with `μ = λψ / ln(1+ψ)` satisfies `S_t = S₀ e^{−αY_t}`,
//! `α = ln(1+ψ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BrownianGbm,
    GeomPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub kind: ModelKind,
    /// Volatility per √time (Brownian only; 0 for Poisson).
    pub sigma: f64,
    /// Jump intensity per unit time (Poisson only; 0 for Brownian).
    pub lambda: f64,
    /// Relative jump size, ψ > −1, ψ ≠ 0 (Poisson only).
    pub psi: f64,
    /// Initial price; the paper's Poisson sections set S₀ = 1 and the
    /// Brownian sections never state it, so 1 is the default everywhere.
    pub s0: f64,
}

impl MarketModel {
    pub fn brownian(sigma: f64) -> Result<Self> {
        let m = MarketModel { kind: ModelKind::BrownianGbm, sigma, lambda: 0.0, psi: 0.0, s0: 1.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn poisson(lambda: f64, psi: f64) -> Result<Self> {
        let m = MarketModel { kind: ModelKind::GeomPoisson, sigma: 0.0, lambda, psi, s0: 1.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn with_s0(mut self, s0: f64) -> Result<Self> {
        self.s0 = s0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            return Err(Error::Param(format!("s0 must be positive and finite, got {}", self.s0)));
        }
        match self.kind {
            ModelKind::BrownianGbm => {
                if !(self.sigma > 0.0) || !self.sigma.is_finite() {
                    return Err(Error::Param(format!("sigma must be > 0, got {}", self.sigma)));
                }
            }
            ModelKind::GeomPoisson => {
                if !(self.lambda > 0.0) || !self.lambda.is_finite() {
                    return Err(Error::Param(format!("lambda must be > 0, got {}", self.lambda)));
                }
                if !(self.psi > -1.0) || self.psi == 0.0 || !self.psi.is_finite() {
                    return Err(Error::Param(format!(
                        "psi must satisfy psi > -1 and psi != 0, got {}",
                        self.psi
                    )));
                }
            }
        }
        Ok(())
    }

    /// α = ln(1+ψ).
    pub fn alpha(&self) -> f64 {
        (1.0 + self.psi).ln()
    }

    /// μ = λψ / ln(1+ψ); μ > λ exactly when ψ > 0.
    pub fn mu(&self) -> f64 {
        self.lambda * self.psi / self.alpha()
    }

    /// Safety loading θ = μ/λ − 1 of the drifted count Y.
    pub fn theta(&self) -> f64 {
        self.mu() / self.lambda - 1.0
    }

    pub fn is_brownian(&self) -> bool {
        self.kind == ModelKind::BrownianGbm
    }

    pub fn is_poisson(&self) -> bool {
        self.kind == ModelKind::GeomPoisson
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(MarketModel::brownian(0.0).is_err());
        assert!(MarketModel::brownian(-1.0).is_err());
        assert!(MarketModel::poisson(0.0, 0.5).is_err());
        assert!(MarketModel::poisson(1.0, 0.0).is_err());
        assert!(MarketModel::poisson(1.0, -1.0).is_err());
        assert!(MarketModel::poisson(1.0, -1.5).is_err());
        assert!(MarketModel::poisson(1.0, 0.5).unwrap().with_s0(0.0).is_err());
    }

    #[test]
    fn drift_sign_matches_jump_sign() {
        // mu > lambda iff psi > 0
        for &psi in &[0.1, 0.5, 1.0, 3.0] {
            let m = MarketModel::poisson(2.0, psi).unwrap();
            assert!(m.mu() > m.lambda, "psi={psi}");
            assert!(m.theta() > 0.0);
        }
        for &psi in &[-0.1, -0.5, -0.9] {
            let m = MarketModel::poisson(2.0, psi).unwrap();
            assert!(m.mu() < m.lambda, "psi={psi}");
            assert!(m.theta() < 0.0);
        }
    }

    #[test]
    fn log_price_drift_is_negative_for_any_psi() {
        // -lambda*psi + lambda*ln(1+psi) < 0 guarantees S -> 0 a.s.
        for &psi in &[-0.9, -0.5, -0.1, 0.1, 0.5, 1.0, 5.0] {
            let m = MarketModel::poisson(1.3, psi).unwrap();
            let drift = -m.lambda * m.psi + m.lambda * m.alpha();
            assert!(drift < 0.0, "psi={psi} drift={drift}");
        }
    }
}
