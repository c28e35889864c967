//! Exponent fits, statistical tests and the verification reports.
//!
//! Every report is a pure function of its configuration (which carries the
//! base seed): replica `i` always draws from `seed.child(i)`, so results do
//! not depend on the worker count.

mod contour;
mod disk;
mod glued;
mod labels;
pub mod stats;

pub use contour::{
    excursion_count_report, excursion_poisson_report, ExcursionCountConfig, ExcursionPoissonConfig,
};
pub use disk::{
    arc_neighborhood_report, ball_volume_report, build_ensemble, geodesic_boundary_report, holder_boundary_report,
    self_consistency_report, ArcNeighborhoodConfig, BallVolumeConfig, EnsembleConfig, GeodesicBoundaryConfig,
    HolderConfig, SelfConsistencyConfig,
};
pub use glued::{
    build_glued_ensemble, flat_counterexample_report, glued_locality_report, FlatConfig, GluedEnsembleConfig,
    GluedLocalityConfig,
};
pub use labels::{label_covariance_report, snake_tail_report, LabelCovarianceConfig, SnakeTailConfig};
pub use stats::poisson_tail_bound;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::rng::SeedRecord;
use crate::Result;

/// Least-squares fit of `log value = intercept + slope · log scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub range: (f64, f64),
    pub n_points: usize,
    pub n_replicas: usize,
}

impl ExponentFit {
    pub fn with_replicas(mut self, n: usize) -> Self {
        self.n_replicas = n;
        self
    }
}

/// Fits a power law to `(scale, value)` pairs.
pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    ensure!(
        pairs.iter().all(|&(s, v)| s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite()),
        InvalidParameter,
        "power-law fit needs positive finite scales and values"
    );
    let mut scales: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    ensure!(scales.len() >= 3, InvalidParameter, "power-law fit needs at least 3 distinct scales (got {})", scales.len());
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>().max(0.0);
    let stderr = if pairs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        r_squared,
        range: (scales[0], scales[scales.len() - 1]),
        n_points: pairs.len(),
        n_replicas: 1,
    })
}

/// `k` points from `lo` to `hi` in geometric progression.
pub fn geometric_sweep(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let r = (hi / lo).powf(1.0 / (k - 1) as f64);
    (0..k).map(|i| if i + 1 == k { hi } else { lo * r.powi(i as i32) }).collect()
}

/// `lo · 2^i` for `i = 0..=octaves`.
pub fn dyadic_sweep(lo: f64, octaves: usize) -> Vec<f64> {
    (0..=octaves).map(|i| lo * (1u64 << i) as f64).collect()
}

/// Drops the smallest and the largest scale.
pub fn trim_ends(mut v: Vec<f64>) -> Vec<f64> {
    if v.len() > 2 {
        v.pop();
        v.remove(0);
    }
    v
}

/// A named quantity with its acceptance band; open ends are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub band: (Option<f64>, Option<f64>),
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub base: SeedRecord,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub parameters: serde_json::Value,
    pub fits: BTreeMap<String, ExponentFit>,
    pub stats: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub seeds: SeedManifest,
    /// Raw `(scale, value)` series behind the fits.
    pub pairs: BTreeMap<String, Vec<(f64, f64)>>,
}

impl Report {
    pub fn new(name: &str, parameters: &impl Serialize, seeds: SeedManifest) -> Self {
        Self {
            name: name.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            fits: BTreeMap::new(),
            stats: BTreeMap::new(),
            checks: Vec::new(),
            seeds,
            pairs: BTreeMap::new(),
        }
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.stats.insert(key.to_string(), value);
    }

    /// Records a fit of `pairs` under `key`; a failed fit is recorded as a
    /// failing check instead.
    pub fn fit(&mut self, key: &str, pairs: Vec<(f64, f64)>, replicas: usize) -> Option<ExponentFit> {
        let fit = fit_exponent(&pairs).map(|f| f.with_replicas(replicas));
        self.pairs.insert(key.to_string(), pairs);
        match fit {
            Ok(f) => {
                self.fits.insert(key.to_string(), f.clone());
                Some(f)
            }
            Err(e) => {
                self.stats.insert(format!("{key}_fit_failed"), f64::NAN);
                self.checks.push(Check { name: format!("{key}: {e}"), value: f64::NAN, band: (None, None), passed: false });
                None
            }
        }
    }

    /// Adds a check; NaN never passes.
    pub fn check(&mut self, name: &str, value: f64, lo: Option<f64>, hi: Option<f64>) -> bool {
        let passed = !value.is_nan() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        self.checks.push(Check { name: name.to_string(), value, band: (lo, hi), passed });
        passed
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True iff there is at least one check and all pass.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "report {}  ({})", self.name, if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(out, "seed {}:{}  replicas {}", self.seeds.base.seed, self.seeds.base.stream, self.seeds.replicas);
        if !self.fits.is_empty() {
            let _ = writeln!(out, "{:<28} {:>9} {:>9} {:>7} {:>21} {:>6}", "fit", "slope", "stderr", "r²", "range", "points");
            for (k, f) in &self.fits {
                let _ = writeln!(
                    out,
                    "{:<28} {:>9.4} {:>9.4} {:>7.4} {:>10.4}..{:<10.4} {:>6}",
                    k, f.slope, f.stderr, f.r_squared, f.range.0, f.range.1, f.n_points
                );
            }
        }
        if !self.stats.is_empty() {
            let _ = writeln!(out, "{:<28} {:>14}", "statistic", "value");
            for (k, v) in &self.stats {
                let _ = writeln!(out, "{:<28} {:>14.6}", k, v);
            }
        }
        let _ = writeln!(out, "{:<44} {:>12} {:>25} {:>6}", "check", "value", "band", "");
        for c in &self.checks {
            let band = format!(
                "[{}, {}]",
                c.band.0.map_or("-inf".to_string(), |v| format!("{v:.4}")),
                c.band.1.map_or("+inf".to_string(), |v| format!("{v:.4}"))
            );
            let _ = writeln!(out, "{:<44} {:>12.6} {:>25} {:>6}", c.name, c.value, band, if c.passed { "pass" } else { "FAIL" });
        }
        out
    }

    /// `series,scale,value` rows of the raw pairs.
    pub fn pairs_csv(&self) -> String {
        let mut out = String::from("series,scale,value\n");
        for (k, v) in &self.pairs {
            for (s, x) in v {
                let _ = writeln!(out, "{k},{s},{x}");
            }
        }
        out
    }
}
