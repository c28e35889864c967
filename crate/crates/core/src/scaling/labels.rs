//! Reports on the label field: sampler agreement and the snake tail.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Report, SeedManifest};
use crate::encoding::ForestCode;
use crate::labels::{sample_labels_snake, snake_walk, CholeskyLabelSampler, DEFAULT_CHOLESKY_CAP};
use crate::rng::SeedRecord;
use crate::sampler::{sample_first_passage_walk, sample_unit_excursion};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelCovarianceConfig {
    pub n: usize,
    pub replicas: usize,
    /// Allowed entrywise gap as a fraction of the largest covariance entry.
    pub tolerance: f64,
    pub seed: SeedRecord,
}

impl Default for LabelCovarianceConfig {
    fn default() -> Self {
        Self { n: 512, replicas: 10_000, tolerance: 0.05, seed: SeedRecord::new(6, 0) }
    }
}

/// Empirical covariance over class representatives (`Z⁰` is class-constant).
fn class_covariance(samples: &[Vec<f64>], reps: &[usize]) -> DMatrix<f64> {
    let (r, k) = (samples.len(), reps.len());
    let mut x = DMatrix::<f64>::from_fn(r, k, |i, j| samples[i][reps[j]]);
    for j in 0..k {
        let m = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-m);
    }
    (x.transpose() * &x) / (r as f64 - 1.0)
}

/// Snake and Cholesky samplers on one walk contour: entrywise covariance gap.
pub fn label_covariance_report(cfg: &LabelCovarianceConfig) -> Result<Report> {
    let mut report = Report::new("label-covariance", cfg, SeedManifest { base: cfg.seed, replicas: cfg.replicas });
    let code = ForestCode::new(sample_first_passage_walk(1.0, 1.0, cfg.n, cfg.seed.child(0))?)?;
    let chol = CholeskyLabelSampler::new(&code, DEFAULT_CHOLESKY_CAP.max(code.len()))?;
    let snake: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| sample_labels_snake(&code, cfg.seed.child(1).child(i as u64)))
        .collect::<Result<_>>()?;
    let dense: Vec<Vec<f64>> =
        (0..cfg.replicas).into_par_iter().map(|i| chol.sample(cfg.seed.child(2).child(i as u64))).collect();
    let classes = code.classes();
    let reps: Vec<usize> = (0..classes.len()).map(|c| classes.members(c)[0] as usize).collect();
    let cs = class_covariance(&snake, &reps);
    let cc = class_covariance(&dense, &reps);
    let heights: Vec<f64> = reps.iter().map(|&i| code.height(i)).collect();
    let scale = heights.iter().cloned().fold(0.0, f64::max);
    let exact = |a: usize, b: usize| {
        let (lo, hi) = (reps[a].min(reps[b]), reps[a].max(reps[b]));
        (lo..=hi).map(|i| code.height(i)).fold(f64::INFINITY, f64::min)
    };
    let k = reps.len();
    let (mut gap, mut snake_err, mut chol_err) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..k {
        for b in a..k {
            let e = exact(a, b);
            gap = gap.max((cs[(a, b)] - cc[(a, b)]).abs());
            snake_err = snake_err.max((cs[(a, b)] - e).abs());
            chol_err = chol_err.max((cc[(a, b)] - e).abs());
        }
    }
    report.stat("grid_points", code.len() as f64);
    report.stat("classes", k as f64);
    report.stat("max_entry", scale);
    report.stat("snake_vs_exact", snake_err / scale);
    report.stat("cholesky_vs_exact", chol_err / scale);
    report.check("max |Ĉ_snake - Ĉ_chol| / max C", gap / scale, Some(0.0), Some(cfg.tolerance));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnakeTailConfig {
    /// Unit excursions have `2·half_len + 2` steps.
    pub half_len: usize,
    pub excursions: usize,
    pub thresholds: Vec<f64>,
    pub slope_band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for SnakeTailConfig {
    fn default() -> Self {
        Self {
            half_len: 511,
            excursions: 1_000_000,
            thresholds: super::geometric_sweep(1.5, 2.5, 5),
            slope_band: (1.0, 1.7),
            seed: SeedRecord::new(7, 0),
        }
    }
}

/// `sup |Z⁰|` over unit-duration excursions; slope of `log(-log P[sup > A])`.
pub fn snake_tail_report(cfg: &SnakeTailConfig) -> Result<Report> {
    let mut report = Report::new("snake-tail", cfg, SeedManifest { base: cfg.seed, replicas: cfg.excursions });
    let sups: Vec<f64> = (0..cfg.excursions)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            let s = cfg.seed.child(i as u64);
            let e = sample_unit_excursion(cfg.half_len, s)?;
            snake_walk(e.values(), e.step(), &mut s.child(1).rng(), buf);
            Ok(buf.iter().fold(0.0f64, |m, z| m.max(z.abs())))
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    for &a in &cfg.thresholds {
        let p = sups.iter().filter(|&&s| s > a).count() as f64 / sups.len() as f64;
        report.stat(&format!("P[sup>{a:.4}]"), p);
        if p > 0.0 && p < 1.0 {
            pairs.push((a, -p.ln()));
        }
    }
    report.stat("P[sup>0]", sups.iter().filter(|&&s| s > 0.0).count() as f64 / sups.len() as f64);
    if let Some(f) = report.fit("log(-log P) vs log A", pairs, cfg.excursions) {
        report.stat("prefactor", f.intercept.exp());
        report.check("tail exponent", f.slope, Some(cfg.slope_band.0), Some(cfg.slope_band.1));
    }
    Ok(report)
}
