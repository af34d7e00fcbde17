//! Flat key-value experiment configuration.
//!
//! The file format is one `key = value` pair per line, `#` comments,
//! versioned through `config_version`. Unknown keys and out-of-range
//! values are rejected with the offending line in the message.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use horizon_core::{Error, MarketModel, RandomTimeSpec, Result};

pub const CONFIG_VERSION: u64 = 1;

/// Which experiment family a run addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Every kind of the default verdict table.
    Full,
    /// A single configured (model, time-kind) pair.
    Single,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub suite: Suite,
    /// Model parameters (used by Suite::Single; the full suite pins its own).
    pub sigma: f64,
    pub lambda: f64,
    pub psi: f64,
    pub s0: f64,
    pub time_kind: String,
    pub level: f64,
    pub level_b: f64,
    pub k1: f64,
    pub k2: f64,
    pub scale: f64,
    /// Ensemble controls.
    pub n_paths: usize,
    pub dt: f64,
    pub eps: f64,
    pub seed: u64,
    pub threads: usize,
    /// Sample size for the Monte-Carlo law tables.
    pub table_paths: usize,
    /// Frozen constant of the Brownian wealth tolerance tol = c·√dt
    /// (calibrated once on the level kind's left-point integration error
    /// tails at N = 10^5 and kept fixed).
    pub tolerance_c: f64,
    /// Frozen constant of the honest-certificate tolerance c·√dt.
    pub tolerance_cert: f64,
    /// Exact-kind tolerance.
    pub tolerance_exact: f64,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: Suite::Full,
            sigma: 1.0,
            lambda: 1.0,
            psi: 0.5,
            s0: 1.0,
            time_kind: "brownian_last_passage_level".into(),
            level: 0.5,
            level_b: 0.5,
            k1: 0.5,
            k2: 0.5,
            scale: 0.5,
            n_paths: 100_000,
            dt: 1.0 / 1024.0,
            eps: 1e-4,
            seed: 42,
            threads: 0,
            table_paths: 100_000,
            tolerance_c: 20.0,
            tolerance_cert: 6.0,
            tolerance_exact: 1e-8,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Io(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Io(format!("line {}: {key}: {what} (got `{value}`)", lineno + 1))
            };
            let f = || value.parse::<f64>().map_err(|_| bad("not a number"));
            let u = || value.parse::<u64>().map_err(|_| bad("not an integer"));
            match key {
                "config_version" => {
                    if u()? != CONFIG_VERSION {
                        return Err(bad("unsupported config version"));
                    }
                }
                "suite" => {
                    cfg.suite = match value {
                        "full" => Suite::Full,
                        "single" => Suite::Single,
                        _ => return Err(bad("expected full|single")),
                    }
                }
                "sigma" => cfg.sigma = f()?,
                "lambda" => cfg.lambda = f()?,
                "psi" => cfg.psi = f()?,
                "s0" => cfg.s0 = f()?,
                "time_kind" => cfg.time_kind = value.to_string(),
                "level" => cfg.level = f()?,
                "level_b" => cfg.level_b = f()?,
                "k1" => cfg.k1 = f()?,
                "k2" => cfg.k2 = f()?,
                "scale" => cfg.scale = f()?,
                "n_paths" => cfg.n_paths = u()? as usize,
                "dt" => cfg.dt = f()?,
                "eps" => cfg.eps = f()?,
                "seed" => cfg.seed = u()?,
                "threads" => cfg.threads = u()? as usize,
                "table_paths" => cfg.table_paths = u()? as usize,
                "tolerance_c" => cfg.tolerance_c = f()?,
                "tolerance_cert" => cfg.tolerance_cert = f()?,
                "tolerance_exact" => cfg.tolerance_exact = f()?,
                "out_dir" => cfg.out_dir = Some(value.to_string()),
                _ => return Err(Error::Io(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Param("n_paths must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Param(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Param(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if self.table_paths == 0 {
            return Err(Error::Param("table_paths must be >= 1".into()));
        }
        if self.suite == Suite::Single {
            let (model, spec) = self.model_and_spec()?;
            spec.validate(&model)?;
        }
        Ok(())
    }

    /// The configured single (model, spec) pair.
    pub fn model_and_spec(&self) -> Result<(MarketModel, RandomTimeSpec)> {
        let spec = match self.time_kind.as_str() {
            "brownian_last_passage_level" => {
                RandomTimeSpec::BrownianLastPassageLevel { level: self.level }
            }
            "brownian_last_passage_maturity" => {
                RandomTimeSpec::BrownianLastPassageBeforeMaturity { level_b: self.level_b }
            }
            "poisson_last_passage_level" => {
                RandomTimeSpec::PoissonLastPassageLevel { level_b: self.level_b }
            }
            "poisson_sup_on_unit" => RandomTimeSpec::PoissonSupOnUnit,
            "poisson_sup_overall" => RandomTimeSpec::PoissonSupOverall,
            "emery_pseudo_stopping" => RandomTimeSpec::EmeryPseudo,
            "convex_combo_jumps" => RandomTimeSpec::ConvexComboJumps { k1: self.k1, k2: self.k2 },
            "min_scaled_jumps" => RandomTimeSpec::MinScaledJumps { scale: self.scale },
            "max_scaled_jumps" => RandomTimeSpec::MaxScaledJumps { scale: self.scale },
            other => return Err(Error::Param(format!("unknown time_kind `{other}`"))),
        };
        let model = match spec {
            RandomTimeSpec::BrownianLastPassageLevel { .. }
            | RandomTimeSpec::BrownianLastPassageBeforeMaturity { .. }
            | RandomTimeSpec::EmeryPseudo => {
                MarketModel::brownian(self.sigma)?.with_s0(self.s0)?
            }
            _ => MarketModel::poisson(self.lambda, self.psi)?.with_s0(self.s0)?,
        };
        Ok((model, spec))
    }

    /// Canonical text form; reparsing it reproduces the config exactly.
    pub fn canonical(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("config_version", CONFIG_VERSION.to_string());
        kv.insert(
            "suite",
            match self.suite {
                Suite::Full => "full".into(),
                Suite::Single => "single".into(),
            },
        );
        kv.insert("sigma", fmt_f64(self.sigma));
        kv.insert("lambda", fmt_f64(self.lambda));
        kv.insert("psi", fmt_f64(self.psi));
        kv.insert("s0", fmt_f64(self.s0));
        kv.insert("time_kind", self.time_kind.clone());
        kv.insert("level", fmt_f64(self.level));
        kv.insert("level_b", fmt_f64(self.level_b));
        kv.insert("k1", fmt_f64(self.k1));
        kv.insert("k2", fmt_f64(self.k2));
        kv.insert("scale", fmt_f64(self.scale));
        kv.insert("n_paths", self.n_paths.to_string());
        kv.insert("dt", fmt_f64(self.dt));
        kv.insert("eps", fmt_f64(self.eps));
        kv.insert("seed", self.seed.to_string());
        kv.insert("threads", self.threads.to_string());
        kv.insert("table_paths", self.table_paths.to_string());
        kv.insert("tolerance_c", fmt_f64(self.tolerance_c));
        kv.insert("tolerance_cert", fmt_f64(self.tolerance_cert));
        kv.insert("tolerance_exact", fmt_f64(self.tolerance_exact));
        if let Some(dir) = &self.out_dir {
            kv.insert("out_dir", dir.clone());
        }
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// FNV-1a of the canonical text, as the report's config fingerprint.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }
}

fn fmt_f64(v: f64) -> String {
    // shortest round-trip representation
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let cfg = ExperimentConfig {
            n_paths: 1234,
            dt: 0.25,
            seed: 9,
            psi: -0.5,
            ..ExperimentConfig::default()
        };
        let text = cfg.canonical();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back.n_paths, 1234);
        assert_eq!(back.dt, 0.25);
        assert_eq!(back.psi, -0.5);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(back.canonical(), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(ExperimentConfig::parse("nonsense").is_err());
        assert!(ExperimentConfig::parse("unknown_key = 3").is_err());
        assert!(ExperimentConfig::parse("n_paths = 0").is_err());
        assert!(ExperimentConfig::parse("dt = -0.5").is_err());
        assert!(ExperimentConfig::parse("eps = 2").is_err());
        assert!(ExperimentConfig::parse("config_version = 99").is_err());
        // comments and blanks are fine
        let ok = ExperimentConfig::parse("# comment\n\nseed = 7 # trailing\n").unwrap();
        assert_eq!(ok.seed, 7);
    }

    #[test]
    fn rejects_paper_range_violations() {
        // psi <= -1
        let bad = ExperimentConfig {
            suite: Suite::Single,
            time_kind: "poisson_sup_on_unit".into(),
            psi: -1.0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        // level outside (0,1)
        let bad = ExperimentConfig {
            suite: Suite::Single,
            time_kind: "brownian_last_passage_level".into(),
            level: 1.5,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        // k1 + k2 != 1
        let bad = ExperimentConfig {
            suite: Suite::Single,
            time_kind: "convex_combo_jumps".into(),
            k1: 0.5,
            k2: 0.6,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        // scale outside (0,1)
        let bad = ExperimentConfig {
            suite: Suite::Single,
            time_kind: "min_scaled_jumps".into(),
            scale: 1.0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        // poisson level needs psi > 0
        let bad = ExperimentConfig {
            suite: Suite::Single,
            time_kind: "poisson_last_passage_level".into(),
            psi: -0.5,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
