//! Monte-Carlo tables for the Poisson running-supremum laws.
//!
//! The propositions for the times of supremum consume
//! `Ψ(x,t) = P(S*_t > x)`, `Φ̂(t) = P(sup_{s<t} S_s ≤ 1)` and
//! `Φ̃(x,t) = P(sup_{s<t} S_s < x)` (finite horizon), plus their
//! infinite-horizon versions. There is no usable closed form, so the laws
//! are estimated once per model from an independent path ensemble and cached
//! on a grid with per-cell standard errors; evaluation is bilinear in
//! (ln x, t) and the errors propagate into every downstream tolerance.
//!
//! The only atom of `S*_t` above S₀ sits exactly at x = S₀ (record-free
//! paths), so the complements are formed combinatorially from the strict
//! count at the first grid row: `Φ̂ = 1 - Ψ(1,·)`, `Φ̃(x,·) = 1 - Ψ(x,·)`
//! for x > 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarketModel;
use crate::path::{simulate_poisson, PoissonPath};
use crate::val::Val;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "horizon", rename_all = "snake_case")]
pub enum SupHorizon {
    /// Laws of `S*_t` for t ∈ [0, 1].
    Unit,
    /// Law of the overall supremum, truncated at `t_max`.
    Overall { t_max: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupLawTables {
    pub version: u32,
    pub model: MarketModel,
    pub horizon: SupHorizon,
    pub sample_size: usize,
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Row-major `[xi * nt + ti]` estimate of P(S*_t > x).
    p: Vec<f64>,
    se: Vec<f64>,
}

const N_X: usize = 481;
const N_T: usize = 129;
const CHUNK: usize = 2048;

impl SupLawTables {
    pub fn build(
        model: &MarketModel,
        horizon: SupHorizon,
        sample_size: usize,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        if !model.is_poisson() {
            return Err(Error::Contract("sup-law tables exist for the Poisson model only".into()));
        }
        if sample_size == 0 {
            return Err(Error::Param("sample_size must be positive".into()));
        }
        let (t_max, t_grid) = match horizon {
            SupHorizon::Unit => {
                // quadratic spacing: the laws steepen sharply near u = 0
                let g = (0..N_T)
                    .map(|i| (i as f64 / (N_T - 1) as f64).powi(2))
                    .collect::<Vec<_>>();
                (1.0, g)
            }
            SupHorizon::Overall { t_max } => {
                if !(t_max > 0.0) {
                    return Err(Error::Param(format!("t_max must be > 0, got {t_max}")));
                }
                (t_max, vec![t_max])
            }
        };
        let x_grid = make_x_grid(model, horizon, t_max);
        let nx = x_grid.len();
        let nt = t_grid.len();
        let ln_x: Vec<f64> = x_grid.iter().map(|x| x.ln()).collect();

        // Integer counts merge associatively, so chunked parallel accumulation
        // is deterministic regardless of thread count.
        let n_chunks = sample_size.div_ceil(CHUNK);
        let counts: Vec<u32> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(sample_size);
                let mut diff = vec![0u32; nx * (nt + 1)];
                for i in lo..hi {
                    let path = simulate_poisson(model, t_max, seed, i as u64)
                        .expect("validated model");
                    tally_first_passages(&path, &ln_x, &t_grid, &mut diff);
                }
                diff
            })
            .reduce(
                || vec![0u32; nx * (nt + 1)],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );

        let n = sample_size as f64;
        let mut p = vec![0.0; nx * nt];
        let mut se = vec![0.0; nx * nt];
        for xi in 0..nx {
            let mut acc = 0u32;
            for ti in 0..nt {
                acc += counts[xi * (nt + 1) + ti];
                let est = acc as f64 / n;
                p[xi * nt + ti] = est;
                se[xi * nt + ti] = (est * (1.0 - est) / n).sqrt().max(1.0 / n);
            }
        }
        Ok(SupLawTables {
            version: 1,
            model: *model,
            horizon,
            sample_size,
            seed,
            x_grid,
            t_grid,
            p,
            se,
        })
    }

    fn cell(&self, xi: usize, ti: usize) -> Val {
        let nt = self.t_grid.len();
        Val::with_se(self.p[xi * nt + ti], self.se[xi * nt + ti])
    }

    /// Finite-horizon `Ψ(x, t) = P(S*_t > x)`; x is clamped to the grid
    /// (ratios sit at 1 up to rounding) and t to [0, 1].
    pub fn psi_xt(&self, x: f64, t: f64) -> Result<Val> {
        if !matches!(self.horizon, SupHorizon::Unit) {
            return Err(Error::Contract("psi_xt needs the unit-horizon table".into()));
        }
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            // S*_0 = S0: the sup exceeds x only for x < S0
            return Ok(Val::exact(if x < self.x_grid[0] { 1.0 } else { 0.0 }));
        }
        let (ti, wt) = locate(&self.t_grid, t);
        Ok(self.interp_x(x, |s, xi| {
            let a = s.cell(xi, ti);
            let b = s.cell(xi, (ti + 1).min(s.t_grid.len() - 1));
            a.scale(1.0 - wt) + b.scale(wt)
        }))
    }

    /// Overall-supremum `Ψ(x) = P(sup_t S_t > x)`.
    pub fn psi_x(&self, x: f64) -> Result<Val> {
        if !matches!(self.horizon, SupHorizon::Overall { .. }) {
            return Err(Error::Contract("psi_x needs the overall-horizon table".into()));
        }
        Ok(self.interp_x(x, |s, xi| s.cell(xi, 0)))
    }

    /// `Φ̂(t) = P(sup_{s<t} S ≤ 1) = 1 - Ψ(1, t)` (the strict count at the
    /// atom x = S₀ is exactly the record probability).
    pub fn phi_hat_t(&self, t: f64) -> Result<Val> {
        Ok(Val::ONE - self.psi_xt(self.x_grid[0], t)?)
    }

    pub fn phi_hat(&self) -> Result<Val> {
        Ok(Val::ONE - self.psi_x(self.x_grid[0])?)
    }

    /// `Φ̃(x, t) = P(sup_{s<t} S < x)` for x > 1 (atomless above S₀).
    pub fn phi_tilde_xt(&self, x: f64, t: f64) -> Result<Val> {
        Ok(Val::ONE - self.psi_xt(x, t)?)
    }

    pub fn phi_tilde_x(&self, x: f64) -> Result<Val> {
        Ok(Val::ONE - self.psi_x(x)?)
    }

    fn interp_x(&self, x: f64, col: impl Fn(&Self, usize) -> Val) -> Val {
        // genuinely sub-S0 levels are exceeded surely; ratios a rounding
        // below S0 belong to the atom row
        if x < self.x_grid[0] * (1.0 - 1e-9) {
            return Val::ONE;
        }
        let lx = x.max(self.x_grid[0]).ln();
        let last = self.x_grid.len() - 1;
        if lx >= self.x_grid[last].ln() {
            // beyond the grid the tail is below the resolution floor
            return Val::with_se(0.0, 1.0 / self.sample_size as f64);
        }
        let (xi, w) = locate_ln(&self.x_grid, lx);
        col(self, xi).scale(1.0 - w) + col(self, xi + 1).scale(w)
    }

    /// Cache key for the table file.
    pub fn key(&self) -> String {
        let h = match self.horizon {
            SupHorizon::Unit => "unit".to_string(),
            SupHorizon::Overall { t_max } => format!("overall{t_max:.3}"),
        };
        format!(
            "suplaw_v{}_l{}_p{}_s{}_{h}_n{}_seed{}",
            self.version, self.model.lambda, self.model.psi, self.model.s0, self.sample_size,
            self.seed
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
        let t: SupLawTables = serde_json::from_reader(std::io::BufReader::new(file))?;
        if t.version != 1 {
            return Err(Error::Io(format!("unsupported sup-law table version {}", t.version)));
        }
        Ok(t)
    }
}

fn make_x_grid(model: &MarketModel, horizon: SupHorizon, t_max: f64) -> Vec<f64> {
    let s0 = model.s0;
    let ln_max = match horizon {
        SupHorizon::Unit => {
            if model.psi > 0.0 {
                // records need jumps; bound the count at the far Poisson tail
                let k = model.lambda + 8.0 * model.lambda.sqrt() + 25.0;
                model.alpha() * k
            } else {
                // the drift line bounds the sup for downward jumps
                -model.lambda * model.psi * 1.0000001
            }
        }
        // maximal-inequality tail: P(sup > x) <= 1/x
        SupHorizon::Overall { .. } => {
            let _ = t_max;
            (1e7f64).ln()
        }
    };
    (0..N_X)
        .map(|i| s0 * (ln_max * i as f64 / (N_X - 1) as f64).exp())
        .collect()
}

/// Record the first-passage time of the running sup through every grid level
/// into a per-level difference array over the t grid.
fn tally_first_passages(path: &PoissonPath, ln_x: &[f64], t_grid: &[f64], diff: &mut [u32]) {
    let nt = t_grid.len();
    let ln_s0 = path.s0.ln();
    let drift = -path.lambda * path.psi;
    let alpha = path.alpha();
    fn mark(diff: &mut [u32], t_grid: &[f64], nt: usize, xi: usize, rho: f64) {
        let ti = t_grid.partition_point(|&t| t < rho);
        if ti < nt {
            diff[xi * (nt + 1) + ti] += 1;
        }
    }
    let mut xi = 0usize;
    while xi < ln_x.len() && ln_x[xi] < ln_s0 {
        mark(diff, t_grid, nt, xi, 0.0);
        xi += 1;
    }
    if path.psi > 0.0 {
        // the sup climbs in vertical steps at record jumps
        let mut cur = ln_s0;
        for (j, &t) in path.jumps.iter().enumerate() {
            let v = ln_s0 + drift * t + alpha * (j + 1) as f64;
            if v > cur {
                while xi < ln_x.len() && ln_x[xi] < v {
                    mark(diff, t_grid, nt, xi, t);
                    xi += 1;
                }
                cur = v;
            }
        }
    } else {
        // the sup climbs linearly (slope `drift` > 0) along record segments
        let mut cur = ln_s0;
        let mut seg_start_t = 0.0;
        let mut seg_start_ln = ln_s0;
        let k = path.jumps.len();
        for j in 0..=k {
            let (seg_end_t, pre) = if j < k {
                (path.jumps[j], ln_s0 + drift * path.jumps[j] + alpha * j as f64)
            } else {
                (path.horizon, ln_s0 + drift * path.horizon + alpha * k as f64)
            };
            let _ = seg_end_t;
            if pre > cur {
                while xi < ln_x.len() && ln_x[xi] < pre {
                    let lvl = ln_x[xi].max(seg_start_ln);
                    let rho = seg_start_t + (lvl - seg_start_ln) / drift;
                    mark(diff, t_grid, nt, xi, rho);
                    xi += 1;
                }
                cur = pre;
            }
            if j < k {
                seg_start_t = path.jumps[j];
                seg_start_ln = pre + alpha; // post-jump value (alpha < 0)
            }
        }
    }
}

/// Index and weight for linear interpolation on an ascending grid.
fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    let i = grid.partition_point(|&g| g <= v).saturating_sub(1).min(grid.len() - 2);
    let w = ((v - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
    (i, w)
}

fn locate_ln(grid: &[f64], ln_v: f64) -> (usize, f64) {
    let i = grid
        .partition_point(|&g| g.ln() <= ln_v)
        .saturating_sub(1)
        .min(grid.len() - 2);
    let (a, b) = (grid[i].ln(), grid[i + 1].ln());
    let w = ((ln_v - a) / (b - a)).clamp(0.0, 1.0);
    (i, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MarketModel {
        MarketModel::poisson(1.0, 0.5).unwrap()
    }

    #[test]
    fn unit_table_basic_shape() {
        let t = SupLawTables::build(&model(), SupHorizon::Unit, 20_000, 99).unwrap();
        // boundary values
        assert_eq!(t.psi_xt(10.0, 0.0).unwrap().v, 0.0);
        assert_eq!(t.psi_xt(0.5, 0.5).unwrap().v, 1.0);
        // monotone: nonincreasing in x, nondecreasing in t
        let mut prev = 2.0;
        for &x in &[1.0, 1.1, 1.3, 1.6, 2.2] {
            let v = t.psi_xt(x, 1.0).unwrap().v;
            assert!(v <= prev + 1e-12, "x={x}");
            prev = v;
        }
        let mut prev = -1.0;
        for &tt in &[0.1, 0.3, 0.6, 1.0] {
            let v = t.psi_xt(1.2, tt).unwrap().v;
            assert!(v >= prev - 1e-12, "t={tt}");
            prev = v;
        }
        // complement identity at the atom row
        let a = t.psi_xt(1.0, 0.7).unwrap();
        let b = t.phi_hat_t(0.7).unwrap();
        assert!((a.v + b.v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unit_table_matches_direct_counts() {
        // P(S*_1 > x) against a direct simulation with a different seed
        let t = SupLawTables::build(&model(), SupHorizon::Unit, 40_000, 7).unwrap();
        let n = 40_000;
        for &x in &[1.0, 1.2, 1.5] {
            let mut count = 0;
            for i in 0..n {
                let p = simulate_poisson(&model(), 1.0, 1234, i).unwrap();
                if p.s_star_at(1.0) > x {
                    count += 1;
                }
            }
            let direct = count as f64 / n as f64;
            let v = t.psi_xt(x, 1.0).unwrap();
            let tol = 4.0 * v.se.hypot((direct * (1.0 - direct) / n as f64).sqrt()) + 0.004;
            assert!((v.v - direct).abs() < tol, "x={x}: {} vs {direct}", v.v);
        }
    }

    #[test]
    fn negative_psi_unit_table() {
        let m = MarketModel::poisson(1.0, -0.5).unwrap();
        let t = SupLawTables::build(&m, SupHorizon::Unit, 20_000, 11).unwrap();
        // records are continuous: P(S*_t > 1) = 1 for t > 0
        assert!((t.psi_xt(1.0, 0.5).unwrap().v - 1.0).abs() < 1e-12);
        // bounded by the drift line exp(-lambda psi t)
        let bound = (0.5f64).exp();
        assert_eq!(t.psi_xt(bound * 1.01, 1.0).unwrap().v, 0.0);
        let v = t.psi_xt(1.1, 1.0).unwrap().v;
        assert!(v > 0.3 && v < 1.0, "v={v}");
    }

    #[test]
    fn overall_table_against_maximal_inequality() {
        let t_max =
            crate::path::effective_horizon(&model(), &crate::RandomTimeSpec::PoissonSupOverall, 1e-3)
                .unwrap();
        let t =
            SupLawTables::build(&model(), SupHorizon::Overall { t_max }, 30_000, 21).unwrap();
        for &x in &[1.5, 2.0, 4.0] {
            let v = t.psi_x(x).unwrap();
            assert!(v.v <= 1.0 / x + 5.0 * v.se + 1e-3, "x={x} v={}", v.v);
            assert!(v.v > 0.0);
        }
        // complements
        let p = t.psi_x(1.0).unwrap();
        let q = t.phi_hat().unwrap();
        assert!((p.v + q.v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tables_round_trip_through_json() {
        let t = SupLawTables::build(&model(), SupHorizon::Unit, 5000, 3).unwrap();
        let dir = std::env::temp_dir().join(format!("suplaw_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join(format!("{}.json", t.key()));
        t.save(&file).unwrap();
        let back = SupLawTables::load(&file).unwrap();
        assert_eq!(t.p, back.p);
        assert_eq!(t.x_grid, back.x_grid);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn build_is_deterministic_single_vs_multi_thread() {
        let a = SupLawTables::build(&model(), SupHorizon::Unit, 6000, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| SupLawTables::build(&model(), SupHorizon::Unit, 6000, 5).unwrap());
        assert_eq!(a.p, b.p);
        assert_eq!(a.se, b.se);
    }
}
