//! Monte-Carlo reports with first-class exclusion accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const Z_95: f64 = 1.959963984540054;

/// Welford accumulator; pushed in path-index order so serial and parallel
/// pipelines reduce identically.
#[derive(Debug, Clone, Default)]
pub struct Stats {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Stats {
    pub fn new() -> Self {
        Stats { n: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn var(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.var() / self.n as f64).sqrt()
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z_95 * self.se(), self.mean + Z_95 * self.se())
    }
}

/// Reason a path was left out of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exclusion {
    UndetectedTau,
    UndetectedNu,
    AmbiguousThreshold,
    ZHitZero,
    WindowNotRealized,
    BoundaryAtom,
    ReconstructionMismatch,
}

impl Exclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Exclusion::UndetectedTau => "undetected_tau",
            Exclusion::UndetectedNu => "undetected_nu",
            Exclusion::AmbiguousThreshold => "ambiguous_threshold",
            Exclusion::ZHitZero => "z_hit_zero",
            Exclusion::WindowNotRealized => "window_not_realized",
            Exclusion::BoundaryAtom => "boundary_atom",
            Exclusion::ReconstructionMismatch => "reconstruction_mismatch",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExclusionCounts(pub BTreeMap<&'static str, usize>);

impl ExclusionCounts {
    pub fn bump(&mut self, reason: Exclusion) {
        *self.0.entry(reason.as_str()).or_insert(0) += 1;
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

/// One Monte-Carlo verdict: estimate, error bars, accounting, outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub name: String,
    pub spec: String,
    pub model: String,
    pub claim: String,
    pub n_paths: usize,
    pub n_used: usize,
    pub n_excluded: usize,
    pub exclusions: BTreeMap<String, usize>,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frac_positive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frac_positive_ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_wealth: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
    pub config_hash: String,
    /// Extra named statistics (deterministic order for byte-stable output).
    pub details: BTreeMap<String, f64>,
}

impl McReport {
    pub fn new(name: &str, spec: &str, model: &str, claim: &str) -> Self {
        McReport {
            name: name.into(),
            spec: spec.into(),
            model: model.into(),
            claim: claim.into(),
            n_paths: 0,
            n_used: 0,
            n_excluded: 0,
            exclusions: BTreeMap::new(),
            estimate: f64::NAN,
            std_error: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            frac_positive: None,
            frac_positive_ci_low: None,
            min_wealth: None,
            verdict: Verdict::Informational,
            seed: 0,
            config_hash: String::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn with_stats(mut self, s: &Stats) -> Self {
        self.estimate = s.mean();
        self.std_error = s.se();
        let (lo, hi) = s.ci95();
        self.ci_low = lo;
        self.ci_high = hi;
        self.n_used = s.n();
        self
    }

    pub fn with_exclusions(mut self, n_paths: usize, ex: &ExclusionCounts) -> Self {
        self.n_paths = n_paths;
        self.n_excluded = ex.total();
        self.exclusions = ex.0.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self
    }

    /// Normal-approximation lower confidence bound for a positive fraction.
    pub fn with_frac_positive(mut self, positives: usize, n: usize) -> Self {
        if n > 0 {
            let p = positives as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            self.frac_positive = Some(p);
            self.frac_positive_ci_low = Some((p - Z_95 * se).max(0.0));
        }
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn passes(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_naive() {
        let xs = [1.0, 2.0, -0.5, 4.0, 0.25];
        let mut s = Stats::new();
        for &x in &xs {
            s.push(x);
        }
        let mean: f64 = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 =
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
        assert!((s.mean() - mean).abs() < 1e-15);
        assert!((s.var() - var).abs() < 1e-15);
        assert_eq!(s.min(), -0.5);
        assert_eq!(s.max(), 4.0);
        let (lo, hi) = s.ci95();
        assert!(lo <= mean && mean <= hi);
    }

    #[test]
    fn report_round_trips_json() {
        let mut ex = ExclusionCounts::default();
        ex.bump(Exclusion::UndetectedTau);
        ex.bump(Exclusion::UndetectedTau);
        ex.bump(Exclusion::ZHitZero);
        let mut s = Stats::new();
        for i in 0..100 {
            s.push(i as f64);
        }
        let r = McReport::new("t", "spec", "model", "claim")
            .with_stats(&s)
            .with_exclusions(103, &ex)
            .with_frac_positive(99, 100)
            .detail("extra", 1.25);
        let js = serde_json::to_string(&r).unwrap();
        let back: McReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back.n_excluded, 3);
        assert_eq!(back.exclusions["undetected_tau"], 2);
        assert_eq!(back.n_used + back.n_excluded, back.n_paths);
        assert_eq!(back.details["extra"], 1.25);
    }
}
