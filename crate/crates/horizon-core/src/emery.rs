//! Deterministic survival curve of the pseudo-stopping time.
//!
//! For τ = sup{t ≤ 1 : S₁ = 2S_t} the conditional survival probability is a
//! deterministic function of time: `P(τ ≤ t | F_t) = Φ(1-t)` with
//! `Φ(u) = P(inf_{s≤u} 2S_s ≥ S_u)`, so `Z_t = 1 - Φ(1-t)` does not depend
//! on the path at all. Φ has no closed form and is estimated by Monte Carlo
//! on a u-grid, with the running infimum refined by the per-step bridge
//! minimum draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarketModel;
use crate::path::simulate_brownian;
use crate::val::Val;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmeryCurve {
    pub version: u32,
    pub model: MarketModel,
    pub sample_size: usize,
    pub seed: u64,
    pub dt: f64,
    pub u_grid: Vec<f64>,
    phi: Vec<f64>,
    se: Vec<f64>,
}

const N_U: usize = 129;
const CHUNK: usize = 1024;

impl EmeryCurve {
    pub fn build(model: &MarketModel, sample_size: usize, seed: u64, dt: f64) -> Result<Self> {
        model.validate()?;
        if !model.is_brownian() {
            return Err(Error::Contract("the pseudo-stopping curve needs the Brownian model".into()));
        }
        if sample_size == 0 {
            return Err(Error::Param("sample_size must be positive".into()));
        }
        let steps = (1.0 / dt).round() as usize;
        if steps == 0 || ((steps as f64) * dt - 1.0).abs() > 1e-9 || steps % (N_U - 1) != 0 {
            return Err(Error::Param(format!(
                "dt must divide 1 into a multiple of {} steps, got {dt}",
                N_U - 1
            )));
        }
        let stride = steps / (N_U - 1);
        let u_grid: Vec<f64> = (0..N_U).map(|i| (i * stride) as f64 * dt).collect();

        let n_chunks = sample_size.div_ceil(CHUNK);
        let counts: Vec<u64> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(sample_size);
                let mut counts = vec![0u64; N_U];
                for i in lo..hi {
                    let p = simulate_brownian(model, 1.0, dt, seed, i as u64).expect("validated");
                    // running bridge-refined infimum of ln S
                    let mut run_min = p.ln_s[0];
                    counts[0] += 1; // u = 0: the infimum is S_0 itself
                    for g in 1..N_U {
                        for step in (g - 1) * stride..g * stride {
                            run_min = run_min.min(p.bridge_min_ln(step));
                        }
                        // inf_{s<=u} 2S_s >= S_u
                        if std::f64::consts::LN_2 + run_min >= p.ln_s[g * stride] {
                            counts[g] += 1;
                        }
                    }
                }
                counts
            })
            .reduce(
                || vec![0u64; N_U],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );

        let n = sample_size as f64;
        let phi: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let se: Vec<f64> =
            phi.iter().map(|&p| (p * (1.0 - p) / n).sqrt().max(1.0 / n)).collect();
        Ok(EmeryCurve { version: 1, model: *model, sample_size, seed, dt, u_grid, phi, se })
    }

    /// Φ(u) with Φ(0) = 1 exactly.
    pub fn phi(&self, u: f64) -> Result<Val> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("phi needs u in [0,1], got {u}")));
        }
        if u == 0.0 {
            return Ok(Val::ONE);
        }
        let idx = self
            .u_grid
            .partition_point(|&g| g <= u)
            .saturating_sub(1)
            .min(self.u_grid.len() - 2);
        let w = ((u - self.u_grid[idx]) / (self.u_grid[idx + 1] - self.u_grid[idx])).clamp(0.0, 1.0);
        Ok(Val::with_se(self.phi[idx], self.se[idx]).scale(1.0 - w)
            + Val::with_se(self.phi[idx + 1], self.se[idx + 1]).scale(w))
    }

    /// The deterministic Azéma supermartingale `Z_t = 1 - Φ(1-t)` for t ≤ 1,
    /// and 0 afterwards (τ ≤ 1 by construction).
    pub fn z(&self, t: f64) -> Result<Val> {
        if t >= 1.0 {
            return Ok(Val::ZERO);
        }
        if t < 0.0 {
            return Err(Error::Domain(format!("z needs t >= 0, got {t}")));
        }
        Ok(Val::ONE - self.phi(1.0 - t)?)
    }

    pub fn key(&self) -> String {
        format!(
            "emery_v{}_sig{}_s{}_dt{:e}_n{}_seed{}",
            self.version, self.model.sigma, self.model.s0, self.dt, self.sample_size, self.seed
        )
        .replace('-', "m")
        .replace('.', "_")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let t: EmeryCurve = serde_json::from_reader(std::io::BufReader::new(file))?;
        if t.version != 1 {
            return Err(Error::Io(format!("unsupported curve version {}", t.version)));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_boundary_and_monotonicity() {
        let model = MarketModel::brownian(1.0).unwrap();
        let c = EmeryCurve::build(&model, 20_000, 42, 1.0 / 512.0).unwrap();
        assert_eq!(c.phi(0.0).unwrap().v, 1.0);
        // u small: close to 1 and non-increasing within noise
        let mut prev = 1.0 + 1e-9;
        for g in 0..N_U {
            let u = c.u_grid[g];
            let v = c.phi(u).unwrap();
            assert!(v.v <= prev + 3.0 * v.se, "u={u}");
            prev = v.v;
        }
        assert!(c.phi(0.02).unwrap().v > 0.9);
        // Z runs from 1 - phi(1) down to 0
        let z0 = c.z(0.0).unwrap();
        assert!(z0.v > 0.3 && z0.v < 0.9, "z0={}", z0.v);
        assert_eq!(c.z(1.0).unwrap().v, 0.0);
        assert!(c.phi(1.5).is_err());
        assert!(c.z(-0.1).is_err());
    }

    #[test]
    fn stable_across_disjoint_seeds() {
        let model = MarketModel::brownian(1.0).unwrap();
        let a = EmeryCurve::build(&model, 30_000, 1, 1.0 / 512.0).unwrap();
        let b = EmeryCurve::build(&model, 30_000, 2, 1.0 / 512.0).unwrap();
        let (x, y) = (a.phi(1.0).unwrap(), b.phi(1.0).unwrap());
        assert!((x.v - y.v).abs() <= 3.0 * x.se.hypot(y.se), "{} vs {}", x.v, y.v);
    }
}
