//! Closed-form Azéma supermartingales along simulated paths.
//!
//! For each (model, random-time) pair the bundle evaluates
//! `Z_t = P(τ > t | F_t)`, the left variant `Z̃_t = P(τ ≥ t | F_t) = Z + ΔA°`,
//! the dual optional projection `A°` and the martingale `m = Z + A°`, using
//! the model's explicit formulas (ruin series, barrier function, sup-law
//! tables, or elementary expressions). Honest kinds carry explicit `A°`;
//! for the jump-combination kinds `m` comes from the propositions' explicit
//! integral form and `A°` is reconstructed as `m − Z`.
//!
//! Values are `Val`s: exact closed forms carry zero standard error, the
//! table-backed sup laws propagate their cell errors.

use crate::emery::EmeryCurve;
use crate::error::{Error, Result};
use crate::model::MarketModel;
use crate::path::{BrownianPath, PoissonPath, SamplePath};
use crate::ruin::RuinProbTable;
use crate::special::{adaptive_simpson, barrier_h, barrier_h_dy};
use crate::suplaw::SupLawTables;
use crate::times::{y_visit_times, RandomTimeSpec};
use crate::val::Val;

pub struct AzemaBundle<'a> {
    pub spec: RandomTimeSpec,
    pub model: MarketModel,
    pub ruin: Option<&'a RuinProbTable>,
    pub sup: Option<&'a SupLawTables>,
    pub emery: Option<&'a EmeryCurve>,
}

impl<'a> AzemaBundle<'a> {
    pub fn new(spec: RandomTimeSpec, model: MarketModel) -> Self {
        AzemaBundle { spec, model, ruin: None, sup: None, emery: None }
    }

    pub fn with_ruin(mut self, t: &'a RuinProbTable) -> Self {
        self.ruin = Some(t);
        self
    }

    pub fn with_sup(mut self, t: &'a SupLawTables) -> Self {
        self.sup = Some(t);
        self
    }

    pub fn with_emery(mut self, c: &'a EmeryCurve) -> Self {
        self.emery = Some(c);
        self
    }

    pub fn ensure_resources(&self) -> Result<()> {
        self.spec.validate(&self.model)?;
        use RandomTimeSpec::*;
        match self.spec {
            PoissonLastPassageLevel { .. } if self.ruin.is_none() => {
                Err(Error::Contract("this kind needs a ruin-probability table".into()))
            }
            PoissonSupOnUnit | PoissonSupOverall if self.sup.is_none() => {
                Err(Error::Contract("this kind needs sup-law tables".into()))
            }
            EmeryPseudo if self.emery.is_none() => {
                Err(Error::Contract("this kind needs the survival curve".into()))
            }
            _ => Ok(()),
        }
    }

    /// Level of Y for the Poisson last-passage kind.
    pub fn y_level(&self) -> f64 {
        match self.spec {
            RandomTimeSpec::PoissonLastPassageLevel { level_b } => {
                -(level_b / self.model.s0).ln() / self.model.alpha()
            }
            _ => f64::NAN,
        }
    }

    fn ruin(&self) -> &RuinProbTable {
        self.ruin.expect("checked by ensure_resources")
    }

    fn sup(&self) -> &SupLawTables {
        self.sup.expect("checked by ensure_resources")
    }

    // ---- generic dispatch ------------------------------------------------

    pub fn z(&self, path: &SamplePath, t: f64) -> Result<Val> {
        match (path, self.spec) {
            (SamplePath::Brownian(p), RandomTimeSpec::BrownianLastPassageLevel { level }) => {
                Ok(Val::exact(brownian_level_z(p.s(grid_index(p, t)?), level)))
            }
            (SamplePath::Brownian(p), RandomTimeSpec::BrownianLastPassageBeforeMaturity { .. }) => {
                self.maturity_z(p, t)
            }
            (SamplePath::Brownian(_), RandomTimeSpec::EmeryPseudo) => {
                self.emery.ok_or_else(|| Error::Contract("missing survival curve".into()))?.z(t)
            }
            (SamplePath::Poisson(p), _) => self.poisson_z(p, t),
            _ => Err(Error::Contract("path model does not match the time spec".into())),
        }
    }

    pub fn z_tilde(&self, path: &SamplePath, t: f64) -> Result<Val> {
        match (path, self.spec) {
            (SamplePath::Brownian(_), RandomTimeSpec::BrownianLastPassageLevel { .. })
            | (SamplePath::Brownian(_), RandomTimeSpec::EmeryPseudo) => self.z(path, t),
            (SamplePath::Brownian(p), RandomTimeSpec::BrownianLastPassageBeforeMaturity { .. }) => {
                if (t - 1.0).abs() < 1e-12 {
                    // atom at maturity on never-crossing paths
                    Ok(Val::exact(if self.maturity_t0(p)?.is_none() { 1.0 } else { 0.0 }))
                } else {
                    self.z(path, t)
                }
            }
            // the jump-combination kinds have Z̃ displayed directly via the
            // weak-inequality indicators (it equals the left limit of Z)
            (SamplePath::Poisson(p), RandomTimeSpec::ConvexComboJumps { .. })
            | (SamplePath::Poisson(p), RandomTimeSpec::MinScaledJumps { .. })
            | (SamplePath::Poisson(p), RandomTimeSpec::MaxScaledJumps { .. }) => {
                self.poisson_z_left(p, t)
            }
            (SamplePath::Poisson(p), _) => Ok(self.poisson_z(p, t)? + self.poisson_da_opt(p, t)?),
            _ => Err(Error::Contract("path model does not match the time spec".into())),
        }
    }

    pub fn a_opt(&self, path: &SamplePath, t: f64) -> Result<Val> {
        match (path, self.spec) {
            (SamplePath::Brownian(p), RandomTimeSpec::BrownianLastPassageLevel { level }) => {
                // no closed form: the downcrossing local-time estimate backs it
                let upto = grid_index(p, t)?;
                let ell = crate::strategy::estimate_local_time_downcrossings(p, level, upto);
                Ok(Val::with_se(ell / (2.0 * level), ell / (2.0 * level) * p.dt.powf(0.25)))
            }
            (SamplePath::Brownian(_), RandomTimeSpec::BrownianLastPassageBeforeMaturity { .. })
            | (SamplePath::Brownian(_), RandomTimeSpec::EmeryPseudo) => {
                Ok(self.m(path, t)? - self.z(path, t)?)
            }
            (SamplePath::Poisson(p), _) => self.poisson_a_opt(p, t),
            _ => Err(Error::Contract("path model does not match the time spec".into())),
        }
    }

    pub fn m(&self, path: &SamplePath, t: f64) -> Result<Val> {
        match (path, self.spec) {
            (SamplePath::Brownian(_), RandomTimeSpec::BrownianLastPassageLevel { .. }) => {
                Ok(self.z(path, t)? + self.a_opt(path, t)?)
            }
            (SamplePath::Brownian(p), RandomTimeSpec::BrownianLastPassageBeforeMaturity { .. }) => {
                self.maturity_m(p, t)
            }
            (SamplePath::Brownian(_), RandomTimeSpec::EmeryPseudo) => Ok(Val::ONE),
            (SamplePath::Poisson(p), _) => self.poisson_m(p, t),
            _ => Err(Error::Contract("path model does not match the time spec".into())),
        }
    }

    // ---- Brownian maturity kind -------------------------------------------

    /// γ = −σ/2 (the drift parameter of V_t = α − γt − W_t, α = ln b / σ).
    fn gamma(&self) -> f64 {
        -0.5 * self.model.sigma
    }

    /// V_t from the path state: V = (ln b − ln S_t)/σ, zero exactly on {S = b}.
    pub fn maturity_v(&self, ln_s: f64) -> f64 {
        let b = match self.spec {
            RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b } => level_b,
            _ => f64::NAN,
        };
        ((b / self.model.s0).ln() + self.model.s0.ln() - ln_s) / self.model.sigma
    }

    /// First time the level is touched, from the refined grid scan.
    pub fn maturity_t0(&self, p: &BrownianPath) -> Result<Option<f64>> {
        let b = match self.spec {
            RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b } => level_b,
            _ => return Err(Error::Contract("not the maturity kind".into())),
        };
        let n1 = (1.0 / p.dt).round() as usize;
        let ln_level = b.ln();
        for i in 0..n1.min(p.n_steps()) {
            if p.step_crosses(i, ln_level) {
                return Ok(Some(p.t(i + 1)));
            }
        }
        Ok(None)
    }

    fn maturity_z(&self, p: &BrownianPath, t: f64) -> Result<Val> {
        if t >= 1.0 {
            return Ok(Val::ZERO);
        }
        match self.maturity_t0(p)? {
            Some(t0) if t0 <= t => {
                let i = grid_index(p, t)?;
                let v = self.maturity_v(p.ln_s[i]);
                let g = self.gamma();
                Ok(Val::exact((g * v).exp() * barrier_h(g, v.abs(), 1.0 - t)?))
            }
            _ => Ok(Val::ONE),
        }
    }

    /// The martingale-part integrand: dm = β 1_{T₀ ≤ t ≤ 1} dW.
    pub fn maturity_beta(&self, ln_s: f64, t: f64) -> Result<f64> {
        if t >= 1.0 {
            return Ok(0.0);
        }
        let g = self.gamma();
        let v = self.maturity_v(ln_s);
        let s = 1.0 - t;
        let sgn = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        Ok((g * v).exp() * (g * barrier_h(g, v.abs(), s)? - sgn * barrier_h_dy(g, v.abs(), s)?))
    }

    fn maturity_m(&self, p: &BrownianPath, t: f64) -> Result<Val> {
        // m = 1 + ∫ β 1_{T0 <= s <= 1} dW as a left-point grid sum
        let t0 = self.maturity_t0(p)?;
        let Some(t0) = t0 else { return Ok(Val::ONE) };
        let last = grid_index(p, t.min(1.0))?;
        let mut acc = 1.0;
        for i in 0..last {
            let ti = p.t(i);
            if ti + 1e-12 >= t0 && ti < 1.0 {
                acc += self.maturity_beta(p.ln_s[i], ti)? * p.dw[i];
            }
        }
        Ok(Val::with_se(acc, self.model.sigma * p.dt.sqrt()))
    }

    // ---- Poisson kinds -----------------------------------------------------

    fn poisson_z(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                // at a visit time Y sits exactly on the level; the float
                // reconstruction μt − k lands on either side, so resolve the
                // branch through the exact visit-time form (Z = Ψ(0) there)
                let k = p.n_at(t);
                if (a + k as f64) / p.mu() == t {
                    return Ok(Val::exact(self.ruin().psi_unchecked(0.0)));
                }
                let y = p.mu() * t - k as f64;
                Ok(if y < a { Val::ONE } else { Val::exact(self.ruin().psi_unchecked(y - a)) })
            }
            PoissonSupOnUnit => {
                if t >= 1.0 {
                    return Ok(Val::ZERO);
                }
                let r = (p.ln_s_star_at(t) - p.ln_s_at(t)).exp();
                self.sup().psi_xt(r, 1.0 - t)
            }
            PoissonSupOverall => {
                let r = (p.ln_s_star_at(t) - p.ln_s_at(t)).exp();
                self.sup().psi_x(r)
            }
            ConvexComboJumps { k1, k2 } => {
                let c = self.model.lambda * k1 / k2;
                Ok(match p.n_at(t) {
                    0 => Val::ONE,
                    1 => Val::exact((-c * (t - p.jumps[0])).exp()),
                    _ => Val::ZERO,
                })
            }
            MinScaledJumps { scale } => {
                let beta = self.model.lambda * (1.0 / scale - 1.0);
                Ok(if p.n_at(t) == 0 { Val::exact(min_g(beta, t)) } else { Val::ZERO })
            }
            MaxScaledJumps { scale } => Ok(if p.n_at(t) == 0 {
                Val::ONE
            } else {
                Val::exact(max_kbar(self.model.lambda, scale, t))
            }),
            _ => Err(Error::Contract("not a Poisson kind".into())),
        }
    }

    /// ΔA° at time t (nonzero only on the kind's support times).
    pub fn poisson_da_opt(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                let theta = self.model.theta();
                let hit = (a + p.n_at(t) as f64) / p.mu() == t;
                Ok(if hit { Val::exact(theta / (1.0 + theta)) } else { Val::ZERO })
            }
            PoissonSupOnUnit => {
                if (t - 1.0).abs() < 1e-12 {
                    let s_star = p.s_star_at(1.0);
                    let target = if p.psi > 0.0 { p.s0 } else { p.s_at(1.0) };
                    return Ok(if s_star == target { Val::ONE } else { Val::ZERO });
                }
                if t > 1.0 {
                    return Ok(Val::ZERO);
                }
                match self.jump_a_opt_weight_unit(p, t)? {
                    Some(v) => Ok(v),
                    None => Ok(Val::ZERO),
                }
            }
            PoissonSupOverall => {
                if t == 0.0 && p.psi > 0.0 {
                    // mass of {tau = 0}: no record ever
                    return self.sup().phi_hat();
                }
                match self.jump_a_opt_weight_overall(p, t)? {
                    Some(v) => Ok(v),
                    None => Ok(Val::ZERO),
                }
            }
            // the jump-combination kinds reconstruct A° from m − Z
            ConvexComboJumps { .. } | MinScaledJumps { .. } | MaxScaledJumps { .. } => {
                Ok((self.poisson_m(p, t)? - self.poisson_z(p, t)?)
                    - (self.poisson_m_left(p, t)? - self.poisson_z_left(p, t)?))
            }
            _ => Err(Error::Contract("not a Poisson kind".into())),
        }
    }

    /// A° jump size when `t` is a qualifying jump time of the unit-sup kind.
    fn jump_a_opt_weight_unit(&self, p: &PoissonPath, t: f64) -> Result<Option<Val>> {
        if t >= 1.0 || !p.jumps.contains(&t) {
            return Ok(None);
        }
        if p.psi > 0.0 {
            // records: S*_{t-} < S_{t-}(1+psi) = S_t
            if p.ln_s_star_pre(t) < p.ln_s_at(t) {
                return Ok(Some(self.sup().phi_hat_t(1.0 - t)?));
            }
        } else if p.ln_s_star_pre(t) == p.ln_s_pre(t) {
            // the pre-jump point was the running max
            return Ok(Some(self.sup().phi_tilde_xt(1.0 / (1.0 + p.psi), 1.0 - t)?));
        }
        Ok(None)
    }

    fn jump_a_opt_weight_overall(&self, p: &PoissonPath, t: f64) -> Result<Option<Val>> {
        if !p.jumps.contains(&t) {
            return Ok(None);
        }
        if p.psi > 0.0 {
            if p.ln_s_star_pre(t) < p.ln_s_at(t) {
                return Ok(Some(self.sup().phi_hat()?));
            }
        } else if p.ln_s_star_pre(t) == p.ln_s_pre(t) {
            return Ok(Some(self.sup().phi_tilde_x(1.0 / (1.0 + p.psi))?));
        }
        Ok(None)
    }

    fn poisson_a_opt(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                let theta = self.model.theta();
                let n = y_visit_times(p, a).iter().filter(|&&v| v <= t).count();
                Ok(Val::exact(n as f64 * theta / (1.0 + theta)))
            }
            PoissonSupOnUnit => {
                let mut acc = Val::ZERO;
                for &tj in &p.jumps {
                    if tj > t || tj >= 1.0 {
                        break;
                    }
                    if let Some(w) = self.jump_a_opt_weight_unit(p, tj)? {
                        acc = acc + w;
                    }
                }
                if t >= 1.0 {
                    acc = acc + self.poisson_da_opt(p, 1.0)?;
                }
                Ok(acc)
            }
            PoissonSupOverall => {
                let mut acc = if p.psi > 0.0 { self.sup().phi_hat()? } else { Val::ZERO };
                for &tj in &p.jumps {
                    if tj > t {
                        break;
                    }
                    if let Some(w) = self.jump_a_opt_weight_overall(p, tj)? {
                        acc = acc + w;
                    }
                }
                Ok(acc)
            }
            ConvexComboJumps { .. } | MinScaledJumps { .. } | MaxScaledJumps { .. } => {
                Ok(self.poisson_m(p, t)? - self.poisson_z(p, t)?)
            }
            _ => Err(Error::Contract("not a Poisson kind".into())),
        }
    }

    fn poisson_m(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        match self.spec {
            PoissonLastPassageLevel { .. } | PoissonSupOnUnit | PoissonSupOverall => {
                Ok(self.poisson_z(p, t)? + self.poisson_a_opt(p, t)?)
            }
            ConvexComboJumps { k1, k2 } => {
                let lam = self.model.lambda;
                let c = lam * k1 / k2;
                if p.jumps.is_empty() || t <= p.jumps[0] {
                    return Ok(Val::ONE);
                }
                let t1 = p.jumps[0];
                let t2 = if p.jumps.len() > 1 { p.jumps[1] } else { f64::INFINITY };
                let upper = t.min(t2);
                let drift = lam / c * (1.0 - (-c * (upper - t1)).exp());
                let jump = if t >= t2 { (-c * (t2 - t1)).exp() } else { 0.0 };
                Ok(Val::exact(1.0 + drift - jump))
            }
            MinScaledJumps { scale } => {
                let lam = self.model.lambda;
                let beta = lam * (1.0 / scale - 1.0);
                let t1 = p.jumps.first().copied().unwrap_or(f64::INFINITY);
                let upper = t.min(t1);
                let drift = lam * min_g_integral(beta, upper);
                let jump = if t >= t1 { min_g(beta, t1) } else { 0.0 };
                Ok(Val::exact(1.0 + drift - jump))
            }
            MaxScaledJumps { scale } => {
                let lam = self.model.lambda;
                let t1 = p.jumps.first().copied().unwrap_or(f64::INFINITY);
                let upper = t.min(t1);
                let k = |s: f64| 1.0 - max_kbar(lam, scale, s);
                let drift = lam * adaptive_simpson(&k, 0.0, upper, 1e-12)?;
                let jump = if t >= t1 { k(t1) } else { 0.0 };
                Ok(Val::exact(1.0 + drift - jump))
            }
            _ => Err(Error::Contract("not a Poisson kind".into())),
        }
    }

    /// Left limit Z_{t−} from the pre-jump state.
    pub fn poisson_z_left(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        let n_pre = p.jumps.partition_point(|&x| x < t);
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                // Y reaches the level from below, so the left limit at a
                // visit still sits on the Y < a branch
                if (a + n_pre as f64) / p.mu() == t {
                    return Ok(Val::ONE);
                }
                let y = p.mu() * t - n_pre as f64;
                Ok(if y < a { Val::ONE } else { Val::exact(self.ruin().psi_unchecked(y - a)) })
            }
            PoissonSupOnUnit => {
                if t >= 1.0 {
                    return Ok(Val::ZERO);
                }
                let r = (p.ln_s_star_pre(t) - p.ln_s_pre(t)).exp();
                self.sup().psi_xt(r, 1.0 - t)
            }
            PoissonSupOverall => {
                let r = (p.ln_s_star_pre(t) - p.ln_s_pre(t)).exp();
                self.sup().psi_x(r)
            }
            ConvexComboJumps { k1, k2 } => {
                let c = self.model.lambda * k1 / k2;
                Ok(match n_pre {
                    0 => Val::ONE,
                    1 => Val::exact((-c * (t - p.jumps[0])).exp()),
                    _ => Val::ZERO,
                })
            }
            MinScaledJumps { scale } => {
                let beta = self.model.lambda * (1.0 / scale - 1.0);
                Ok(if n_pre == 0 { Val::exact(min_g(beta, t)) } else { Val::ZERO })
            }
            MaxScaledJumps { scale } => Ok(if n_pre == 0 {
                Val::ONE
            } else {
                Val::exact(max_kbar(self.model.lambda, scale, t))
            }),
            _ => Err(Error::Contract("left limits exist for Poisson kinds".into())),
        }
    }

    fn poisson_m_left(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        // m is right-continuous with jumps only at jump times
        if p.jumps.contains(&t) {
            let nu = self.poisson_nu_hat(p, t)?;
            return Ok(self.poisson_m(p, t)? - nu);
        }
        self.poisson_m(p, t)
    }

    /// The predictable-representation integrand of m: the jump Δm a jump at
    /// t would produce, from left limits only (`dm = ν̂ dM`).
    pub fn poisson_nu_hat(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        use RandomTimeSpec::*;
        let n_pre = p.jumps.partition_point(|&x| x < t);
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                let y = p.y_pre(t);
                let ruin = self.ruin();
                let mut acc = 0.0;
                if y >= a + 1.0 {
                    acc += ruin.psi_unchecked(y - a - 1.0);
                } else {
                    acc += 1.0;
                }
                if y >= a {
                    acc -= ruin.psi_unchecked(y - a);
                } else {
                    acc -= 1.0;
                }
                Ok(Val::exact(acc))
            }
            PoissonSupOnUnit => {
                let psi_j = p.psi;
                if (t - 1.0).abs() < 1e-12 {
                    // the maturity term of the displayed integrand
                    let s_star = p.s_star_pre(1.0);
                    let s_pre = p.s_pre(1.0);
                    let with_jump = s_star.max(s_pre * (1.0 + psi_j));
                    let without = s_star.max(s_pre);
                    let ind = |x: f64| if x == p.s0 { 1.0 } else { 0.0 };
                    return Ok(Val::exact(ind(with_jump) - ind(without)));
                }
                if t > 1.0 {
                    return Ok(Val::ZERO);
                }
                let tbl = self.sup();
                let ln_pre = p.ln_s_pre(t);
                let ln_star = p.ln_s_star_pre(t);
                // hypothetical post-jump state (equals the actual one at jumps)
                let ln_post = ln_pre + p.alpha();
                let r = (ln_star - ln_pre).exp();
                if psi_j > 0.0 {
                    // max(r/(1+psi), 1): at records the post value is the sup
                    let record = ln_post > ln_star;
                    let x1 = if record { 1.0 } else { (ln_star - ln_post).exp() };
                    let a = tbl.psi_xt(x1, 1.0 - t)?;
                    let b = tbl.psi_xt(r, 1.0 - t)?;
                    let atom =
                        if record { tbl.phi_hat_t(1.0 - t)? } else { Val::ZERO };
                    Ok(a - b + atom)
                } else {
                    // S* is continuous: S*_t = S*_{t-}. The A° display jumps
                    // by the plain Φ̃ at sup-attaining jumps, so the jump of
                    // m = Z + A° carries Φ̃ unscaled; the printed strategy
                    // multiplies this term by ψ, which the exact jump
                    // identity rejects (see `sup_displayed_phi_residual`).
                    let at_max = ln_star == ln_pre;
                    let a = tbl.psi_xt((ln_star - ln_post).exp(), 1.0 - t)?;
                    let b = tbl.psi_xt(r, 1.0 - t)?;
                    let atom = if at_max {
                        tbl.phi_tilde_xt(1.0 / (1.0 + psi_j), 1.0 - t)?
                    } else {
                        Val::ZERO
                    };
                    Ok(a - b + atom)
                }
            }
            PoissonSupOverall => {
                let psi_j = p.psi;
                let tbl = self.sup();
                let ln_pre = p.ln_s_pre(t);
                let ln_star = p.ln_s_star_pre(t);
                // hypothetical post-jump state (equals the actual one at jumps)
                let ln_post = ln_pre + p.alpha();
                let r = (ln_star - ln_pre).exp();
                if psi_j > 0.0 {
                    let record = ln_post > ln_star;
                    let x1 = if record { 1.0 } else { (ln_star - ln_post).exp() };
                    let a = tbl.psi_x(x1)?;
                    let b = tbl.psi_x(r)?;
                    let atom = if record { tbl.phi_hat()? } else { Val::ZERO };
                    Ok(a - b + atom)
                } else {
                    // same Φ̃ convention as the finite-horizon case above
                    let at_max = ln_star == ln_pre;
                    let a = tbl.psi_x((ln_star - ln_post).exp())?;
                    let b = tbl.psi_x(r)?;
                    let atom = if at_max {
                        tbl.phi_tilde_x(1.0 / (1.0 + psi_j))?
                    } else {
                        Val::ZERO
                    };
                    Ok(a - b + atom)
                }
            }
            ConvexComboJumps { k1, k2 } => {
                let c = self.model.lambda * k1 / k2;
                Ok(if n_pre == 1 {
                    Val::exact(-(-c * (t - p.jumps[0])).exp())
                } else {
                    Val::ZERO
                })
            }
            MinScaledJumps { scale } => {
                let beta = self.model.lambda * (1.0 / scale - 1.0);
                Ok(if n_pre == 0 { Val::exact(-min_g(beta, t)) } else { Val::ZERO })
            }
            MaxScaledJumps { scale } => Ok(if n_pre == 0 {
                Val::exact(-(1.0 - max_kbar(self.model.lambda, scale, t)))
            } else {
                Val::ZERO
            }),
            _ => Err(Error::Contract("nu_hat exists for Poisson kinds".into())),
        }
    }

    /// Integrand used by the NUPBR deflators. It is the jump of the optional
    /// `m = Z + A°`, which for the scaled-minimum kind differs from the
    /// Doob–Meyer integrand displayed with the strategy: A° carries an atom
    /// of size e^{-βt} at T₁ (the conditional mass of {τ = T₁}), so
    /// Δ(Z+A°) = -βte^{-βt} while ΔZ alone is -g(t). Using the optional
    /// integrand keeps Z₋ + ν̂ = e^{-βt} > 0, where the Doob–Meyer one
    /// degenerates to zero exactly at the stopped jump.
    pub fn poisson_nu_hat_deflator(&self, p: &PoissonPath, t: f64) -> Result<Val> {
        if let RandomTimeSpec::MinScaledJumps { scale } = self.spec {
            let beta = self.model.lambda * (1.0 / scale - 1.0);
            let n_pre = p.jumps.partition_point(|&x| x < t);
            return Ok(if n_pre == 0 {
                Val::exact(-beta * t * (-beta * t).exp())
            } else {
                Val::ZERO
            });
        }
        self.poisson_nu_hat(p, t)
    }

    /// Interior discontinuity times of the predictable integrands inside a
    /// jump-free window (lo, hi): the ruin bracket flips where Y₋ crosses
    /// the level and level+1, the sup-kind indicators flip where the drift
    /// carries the ratio S*₋/S₋ through 1+ψ (ψ > 0) or back onto the old
    /// maximum (ψ < 0). Quadratures split there.
    pub fn smooth_breakpoints(&self, p: &PoissonPath, lo: f64, hi: f64) -> Vec<f64> {
        use RandomTimeSpec::*;
        let mut out = Vec::new();
        let mut push = |t: f64| {
            if t > lo && t < hi {
                out.push(t);
            }
        };
        match self.spec {
            PoissonLastPassageLevel { .. } => {
                let a = self.y_level();
                let mu = p.mu();
                let k = p.jumps.partition_point(|&x| x <= lo) as f64;
                push((a + k) / mu);
                push((a + 1.0 + k) / mu);
            }
            PoissonSupOnUnit | PoissonSupOverall => {
                let drift = -p.lambda * p.psi;
                let ln_pre_lo = p.s_pre(lo.max(f64::MIN_POSITIVE)).ln();
                let ln_sup = p.s_star_pre(lo.max(f64::MIN_POSITIVE)).ln().max(ln_pre_lo);
                if p.psi > 0.0 {
                    // ratio grows as e^{λψ(s-lo)}: crossing of 1+ψ
                    let r0 = ln_sup - ln_pre_lo;
                    push(lo + (p.alpha() - r0) / (p.lambda * p.psi));
                } else {
                    // rising price touches the old maximum
                    push(lo + (ln_sup - ln_pre_lo) / drift);
                }
                if matches!(self.spec, PoissonSupOnUnit) {
                    push(1.0);
                }
            }
            _ => {}
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// All quadrature cell boundaries in (t0, t1]: jump times plus the
    /// interior discontinuities of each jump-free window, ending at t1.
    pub fn quadrature_cells(&self, p: &PoissonPath, t0: f64, t1: f64) -> Vec<f64> {
        let mut bounds: Vec<f64> =
            p.jumps.iter().copied().filter(|&x| x > t0 && x < t1).collect();
        bounds.push(t1);
        let mut out = Vec::with_capacity(bounds.len() * 2);
        let mut lo = t0;
        for hi in bounds {
            out.extend(self.smooth_breakpoints(p, lo, hi));
            out.push(hi);
            lo = hi;
        }
        out
    }

    /// dW-coefficient of m for the Brownian kinds (never differentiated
    /// numerically; read off the closed forms).
    pub fn brownian_dm_coeff(&self, p: &BrownianPath, i: usize, t: f64) -> Result<f64> {
        use RandomTimeSpec::*;
        match self.spec {
            BrownianLastPassageLevel { level } => {
                let s = p.s(i);
                Ok(if s < level { self.model.sigma * s / level } else { 0.0 })
            }
            BrownianLastPassageBeforeMaturity { .. } => self.maturity_beta(p.ln_s[i], t),
            EmeryPseudo => Ok(0.0),
            _ => Err(Error::Contract("not a Brownian kind".into())),
        }
    }
}

fn grid_index(p: &BrownianPath, t: f64) -> Result<usize> {
    let i = (t / p.dt).round() as usize;
    if i >= p.ln_s.len() || (p.t(i) - t).abs() > 1e-9 {
        return Err(Error::Contract(format!("t={t} is not a grid time (dt={})", p.dt)));
    }
    Ok(i)
}

/// Z of the level kind from the price alone: 1 − (1 − S/a)⁺ = min(S/a, 1).
pub fn brownian_level_z(s: f64, level: f64) -> f64 {
    (s / level).min(1.0)
}

/// e^{-βt}(βt + 1).
pub fn min_g(beta: f64, t: f64) -> f64 {
    (-beta * t).exp() * (beta * t + 1.0)
}

/// ∫₀ᵘ e^{-βs}(βs+1) ds = 2(1 - e^{-βu})/β − u e^{-βu}.
pub fn min_g_integral(beta: f64, u: f64) -> f64 {
    2.0 * (1.0 - (-beta * u).exp()) / beta - u * (-beta * u).exp()
}

/// λt e^{-λt/a} / (1 - e^{-λt}), continuously extended by 1 at t = 0.
pub fn max_kbar(lambda: f64, a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let x = lambda * t;
    if x < 1e-8 {
        // expand 1 - e^{-x} to avoid 0/0
        return (-(x) / a).exp() / (1.0 - 0.5 * x + x * x / 6.0);
    }
    x * (-x / a).exp() / (1.0 - (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{simulate_brownian, simulate_poisson};
    use crate::times::{realize, TimeAux};

    #[test]
    fn brownian_level_z_values() {
        assert_eq!(brownian_level_z(0.25, 0.5), 0.5);
        assert_eq!(brownian_level_z(0.5, 0.5), 1.0);
        assert_eq!(brownian_level_z(0.8, 0.5), 1.0);
    }

    #[test]
    fn min_scaled_z_printed_value() {
        // lambda = 1, a = 1/2 => beta = 1; t = 1 before T1: Z = 2/e
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let spec = RandomTimeSpec::MinScaledJumps { scale: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        let p = PoissonPath::from_jumps(1.0, 0.5, 1.0, 10.0, 0, 0, vec![3.0, 5.0]);
        let z = bundle.z(&SamplePath::Poisson(p), 1.0).unwrap();
        assert!((z.v - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((z.v - 0.7357588823428847).abs() < 1e-10);
    }

    #[test]
    fn poisson_level_a_opt_counts_visits() {
        let model = MarketModel::poisson(1.0, 1.0).unwrap();
        let spec = RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 };
        let ruin = RuinProbTable::new(model.theta()).unwrap();
        let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
        let theta = model.theta();
        let p = simulate_poisson(&model, 40.0, 3, 1).unwrap();
        let a = bundle.y_level();
        let visits = y_visit_times(&p, a);
        assert!(!visits.is_empty());
        let sp = SamplePath::Poisson(p.clone());
        // before the first visit
        let before = bundle.a_opt(&sp, visits[0] * 0.5).unwrap();
        assert_eq!(before.v, 0.0);
        // after n visits
        for (n, &v) in visits.iter().enumerate() {
            let got = bundle.a_opt(&sp, v).unwrap();
            let expect = (n + 1) as f64 * theta / (1.0 + theta);
            assert!((got.v - expect).abs() < 1e-12);
            // Z-tilde at a visit is exactly 1: Psi(0) + theta/(1+theta)
            let zt = bundle.z_tilde(&sp, v).unwrap();
            assert!((zt.v - 1.0).abs() < 1e-12, "visit {n}: {}", zt.v);
        }
        // honest: A° constant after tau
        let r = realize(&spec, &sp).unwrap();
        if r.detected {
            let at_tau = bundle.a_opt(&sp, r.tau).unwrap();
            let later = bundle.a_opt(&sp, p.horizon).unwrap();
            assert_eq!(at_tau.v, later.v);
        }
    }

    #[test]
    fn m_starts_at_one_for_analytic_kinds() {
        let model = MarketModel::poisson(1.3, 0.7).unwrap();
        let ruin = RuinProbTable::new(model.theta()).unwrap();
        let p = simulate_poisson(&model, 30.0, 9, 4).unwrap();
        let sp = SamplePath::Poisson(p);
        for spec in [
            RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 },
            RandomTimeSpec::ConvexComboJumps { k1: 0.4, k2: 0.6 },
            RandomTimeSpec::MinScaledJumps { scale: 0.5 },
            RandomTimeSpec::MaxScaledJumps { scale: 0.5 },
        ] {
            let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
            let m0 = bundle.m(&sp, 0.0).unwrap();
            assert!((m0.v - 1.0).abs() < 1e-12, "{spec:?}: {}", m0.v);
        }
    }

    #[test]
    fn convex_combo_m_at_tau_exceeds_one() {
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let spec = RandomTimeSpec::ConvexComboJumps { k1: 0.5, k2: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        for idx in 0..50 {
            let p = simulate_poisson(&model, 30.0, 41, idx).unwrap();
            if p.jumps.len() < 2 {
                continue;
            }
            let sp = SamplePath::Poisson(p.clone());
            let r = realize(&spec, &sp).unwrap();
            let m_tau = bundle.m(&sp, r.tau).unwrap();
            assert!(m_tau.v > 1.0, "m_tau={}", m_tau.v);
            // explicit integral form
            let (t1, _t2) = match r.aux {
                TimeAux::TwoJumps { t1, t2 } => (t1, t2),
                _ => unreachable!(),
            };
            let c = model.lambda * 1.0; // k1/k2 = 1
            let expect = 1.0 + model.lambda / c * (1.0 - (-c * (r.tau - t1)).exp());
            assert!((m_tau.v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn z_tilde_matches_closed_forms_at_tau_for_jump_kinds() {
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        for idx in 0..60 {
            let p = simulate_poisson(&model, 40.0, 17, idx).unwrap();
            if p.jumps.len() < 2 {
                continue;
            }
            let (t1, t2) = (p.jumps[0], p.jumps[1]);
            let sp = SamplePath::Poisson(p.clone());

            let spec = RandomTimeSpec::ConvexComboJumps { k1: 0.3, k2: 0.7 };
            let bundle = AzemaBundle::new(spec, model);
            let r = realize(&spec, &sp).unwrap();
            let zt = bundle.z_tilde(&sp, r.tau).unwrap();
            let expect = (-model.lambda * 0.3 * (t2 - t1)).exp();
            assert!((zt.v - expect).abs() < 1e-12);
            assert!(zt.v < 1.0);

            let spec = RandomTimeSpec::MinScaledJumps { scale: 0.5 };
            let bundle = AzemaBundle::new(spec, model);
            let r = realize(&spec, &sp).unwrap();
            let beta = model.lambda * 1.0;
            if t1 > 0.5 * t2 {
                let zt = bundle.z_tilde(&sp, r.tau).unwrap();
                let expect = min_g(beta, 0.5 * t2);
                assert!((zt.v - expect).abs() < 1e-12);
                assert!(zt.v < 1.0);
            }

            let spec = RandomTimeSpec::MaxScaledJumps { scale: 0.5 };
            let bundle = AzemaBundle::new(spec, model);
            let r = realize(&spec, &sp).unwrap();
            let zt = bundle.z_tilde(&sp, r.tau).unwrap();
            if t1 >= 0.5 * t2 {
                assert_eq!(zt.v, 1.0);
            } else {
                let expect = max_kbar(model.lambda, 0.5, r.tau);
                assert!((zt.v - expect).abs() < 1e-12);
                assert!(zt.v < 1.0);
            }
        }
    }

    #[test]
    fn emery_z_is_path_independent_and_m_is_one() {
        let model = MarketModel::brownian(1.0).unwrap();
        let curve = EmeryCurve::build(&model, 5000, 7, 1.0 / 512.0).unwrap();
        let bundle = AzemaBundle::new(RandomTimeSpec::EmeryPseudo, model).with_emery(&curve);
        let p1 = simulate_brownian(&model, 1.0, 1.0 / 512.0, 1, 0).unwrap();
        let p2 = simulate_brownian(&model, 1.0, 1.0 / 512.0, 1, 1).unwrap();
        for &t in &[0.0, 0.25, 0.5, 0.75] {
            let a = bundle.z(&SamplePath::Brownian(p1.clone()), t).unwrap();
            let b = bundle.z(&SamplePath::Brownian(p2.clone()), t).unwrap();
            assert_eq!(a.v, b.v);
        }
        assert_eq!(bundle.m(&SamplePath::Brownian(p1), 0.5).unwrap().v, 1.0);
    }

    #[test]
    fn maturity_z_hits_one_at_level_touch() {
        let model = MarketModel::brownian(1.0).unwrap();
        let spec = RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b: 0.5 };
        let bundle = AzemaBundle::new(spec, model);
        // H(gamma, 0, s) = 1, so Z at a zero of V equals 1
        let g = bundle.gamma();
        let h = barrier_h(g, 0.0, 0.4).unwrap();
        assert_eq!(h, 1.0);
        // before the first touch Z = 1 by the displayed indicator
        let p = simulate_brownian(&model, 1.0, 1.0 / 512.0, 3, 2).unwrap();
        let sp = SamplePath::Brownian(p.clone());
        if let Some(t0) = bundle.maturity_t0(&p).unwrap() {
            if t0 > 0.1 {
                assert_eq!(bundle.z(&sp, 0.0625).unwrap().v, 1.0);
            }
            let z = bundle.z(&sp, (t0 / p.dt).round() as usize as f64 * p.dt).unwrap();
            assert!(z.v <= 1.0 + 1e-12 && z.v > 0.8, "z at touch {}", z.v);
        }
    }

    #[test]
    fn jump_identity_nu_hat_equals_m_jump() {
        // Δm at an actual jump equals the predictable integrand evaluated there
        let model = MarketModel::poisson(1.0, 0.5).unwrap();
        let ruin = RuinProbTable::new(model.theta()).unwrap();
        for idx in 0..40 {
            let p = simulate_poisson(&model, 30.0, 23, idx).unwrap();
            if p.jumps.len() < 2 {
                continue;
            }
            let sp = SamplePath::Poisson(p.clone());
            for spec in [
                RandomTimeSpec::PoissonLastPassageLevel { level_b: 0.5 },
                RandomTimeSpec::ConvexComboJumps { k1: 0.5, k2: 0.5 },
                RandomTimeSpec::MinScaledJumps { scale: 0.5 },
                RandomTimeSpec::MaxScaledJumps { scale: 0.5 },
            ] {
                let bundle = AzemaBundle::new(spec, model).with_ruin(&ruin);
                for &tj in p.jumps.iter().take(3) {
                    let m_right = bundle.m(&sp, tj).unwrap();
                    let m_left = bundle.poisson_m_left(&p, tj).unwrap();
                    let nu = bundle.poisson_nu_hat(&p, tj).unwrap();
                    assert!(
                        ((m_right.v - m_left.v) - nu.v).abs() < 1e-11,
                        "{spec:?} at {tj}: {} vs {}",
                        m_right.v - m_left.v,
                        nu.v
                    );
                }
            }
        }
    }
}
