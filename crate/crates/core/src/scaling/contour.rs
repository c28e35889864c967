//! Reports on the running-infimum structure of Brownian motion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, variance};
use super::{Report, SeedManifest};
use crate::rng::SeedRecord;
use crate::sampler::{path_infimum, sample_bm, sample_ladder, Discretization, DEFAULT_MAX_STEPS};
use crate::Result;

/// `ρ₁ = -inf_{[0,δ]} B` and the covering count `N_δ` of `{T_r : r ∈ [0,1]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExcursionCountConfig {
    /// Horizons for the `E[ρ₁]` check; empty skips it.
    pub rho_deltas: Vec<f64>,
    pub rho_replicas: usize,
    /// Grid steps per path; the infimum between grid points is drawn exactly.
    pub rho_steps: usize,
    pub rho_tolerance: f64,
    /// Box sizes for `E[N_δ]`; empty skips the slope check.
    pub count_deltas: Vec<f64>,
    pub count_replicas: usize,
    pub count_dt: f64,
    /// Excursions climbing this far above the infimum are completed exactly.
    pub skip_height: f64,
    pub slope_band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for ExcursionCountConfig {
    fn default() -> Self {
        Self {
            rho_deltas: vec![0.25, 1.0],
            rho_replicas: 100_000,
            rho_steps: 256,
            rho_tolerance: 0.02,
            count_deltas: super::dyadic_sweep(1.0 / 1024.0, 4),
            count_replicas: 10_000,
            count_dt: 1e-6,
            skip_height: 0.01,
            slope_band: (-0.6, -0.4),
            seed: SeedRecord::new(3, 0),
        }
    }
}

pub fn excursion_count_report(cfg: &ExcursionCountConfig) -> Result<Report> {
    let replicas = cfg.rho_replicas.max(cfg.count_replicas);
    let mut report = Report::new("excursion-count", cfg, SeedManifest { base: cfg.seed, replicas });
    for (k, &delta) in cfg.rho_deltas.iter().enumerate() {
        let base = cfg.seed.child(1).child(k as u64);
        let steps = cfg.rho_steps.max(1);
        let rho: Vec<f64> = (0..cfg.rho_replicas)
            .into_par_iter()
            .map(|i| {
                let s = base.child(i as u64);
                let path = sample_bm(steps + 1, delta / steps as f64, 0.0, Discretization::Gaussian, s)?;
                Ok(-path_infimum(&path, &mut s.child(1).rng()))
            })
            .collect::<Result<_>>()?;
        let target = (2.0 / std::f64::consts::PI).sqrt() * delta.sqrt();
        let m = mean(&rho);
        if k == 0 {
            report.stat("mean_rho1", m);
        }
        report.stat(&format!("mean_rho1[δ={delta}]"), m);
        report.stat(&format!("target_rho1[δ={delta}]"), target);
        report.check(
            &format!("E[ρ₁] at δ={delta}"),
            m,
            Some(target * (1.0 - cfg.rho_tolerance)),
            Some(target * (1.0 + cfg.rho_tolerance)),
        );
    }
    if !cfg.count_deltas.is_empty() {
        let base = cfg.seed.child(2);
        let counts: Vec<Vec<usize>> = (0..cfg.count_replicas)
            .into_par_iter()
            .map(|i| {
                let ladder = sample_ladder(1.0, cfg.count_dt, cfg.skip_height, DEFAULT_MAX_STEPS, base.child(i as u64))?;
                let times: Vec<f64> = ladder.first_passage_times().collect();
                Ok(cfg.count_deltas.iter().map(|&d| covering_count(&times, d)).collect())
            })
            .collect::<Result<_>>()?;
        let pairs: Vec<(f64, f64)> = cfg
            .count_deltas
            .iter()
            .enumerate()
            .map(|(k, &d)| (d, counts.iter().map(|c| c[k] as f64).sum::<f64>() / counts.len() as f64))
            .collect();
        for &(d, m) in &pairs {
            report.stat(&format!("mean_N[δ={d}]"), m);
        }
        if let Some(f) = report.fit("log E[N_δ] vs log δ", pairs, cfg.count_replicas) {
            report.check("N_δ slope", f.slope, Some(cfg.slope_band.0), Some(cfg.slope_band.1));
        }
    }
    Ok(report)
}

/// Number of boxes `[(k-1)δ, kδ]` met by the sorted time set.
pub(crate) fn covering_count(times: &[f64], delta: f64) -> usize {
    let mut count = 0;
    let mut last = u64::MAX;
    for &t in times {
        let k = (t / delta).floor() as u64;
        if k != last {
            count += 1;
            last = k;
        }
    }
    count
}

/// Counts of excursions longer than `A` while `-inf B` crosses `[r₁, r₂]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExcursionPoissonConfig {
    pub r1: f64,
    pub r2: f64,
    pub threshold: f64,
    pub replicas: usize,
    pub dt: f64,
    pub skip_height: f64,
    pub tolerance: f64,
    pub dispersion_band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for ExcursionPoissonConfig {
    fn default() -> Self {
        Self {
            r1: 0.0,
            r2: 1.0,
            threshold: 1.0,
            replicas: 100_000,
            dt: 1e-5,
            skip_height: 0.01,
            tolerance: 0.05,
            dispersion_band: (0.9, 1.1),
            seed: SeedRecord::new(5, 0),
        }
    }
}

pub fn excursion_poisson_report(cfg: &ExcursionPoissonConfig) -> Result<Report> {
    let mut report = Report::new("excursion-poisson", cfg, SeedManifest { base: cfg.seed, replicas: cfg.replicas });
    let counts: Vec<f64> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let ladder = sample_ladder(cfg.r2, cfg.dt, cfg.skip_height, DEFAULT_MAX_STEPS, cfg.seed.child(i as u64))?;
            Ok(ladder
                .excursions
                .iter()
                .filter(|e| e.level >= cfg.r1 && e.level <= cfg.r2 && e.duration() > cfg.threshold)
                .count() as f64)
        })
        .collect::<Result<_>>()?;
    let target = 2.0 / std::f64::consts::PI.sqrt() * (cfg.r2 - cfg.r1) / cfg.threshold.sqrt();
    let (m, v) = (mean(&counts), variance(&counts));
    report.stat("target_mean", target);
    // Lévy measure of the first-passage subordinator: E e^{-λT_r} = e^{-r√(2λ)}
    let first_passage = (2.0 / std::f64::consts::PI).sqrt() * (cfg.r2 - cfg.r1) / cfg.threshold.sqrt();
    report.stat("first_passage_mean", first_passage);
    report.stat("mean/first_passage_mean", mean(&counts) / first_passage);
    report.stat("mean", m);
    report.stat("variance", v);
    report.stat("dispersion", v / m);
    let t = cfg.tolerance;
    report.check("mean count", m, Some(target * (1.0 - t)), Some(target * (1.0 + t)));
    report.check("count variance", v, Some(target * (1.0 - t)), Some(target * (1.0 + t)));
    report.check("dispersion index", v / m, Some(cfg.dispersion_band.0), Some(cfg.dispersion_band.1));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_count_boxes() {
        assert_eq!(covering_count(&[0.0, 0.1, 0.2, 1.5, 3.9], 1.0), 3);
        assert_eq!(covering_count(&[0.0, 0.5], 10.0), 1);
        assert_eq!(covering_count(&[], 1.0), 0);
    }

    #[test]
    fn small_reports_run_and_carry_fields() {
        let cfg = ExcursionCountConfig {
            rho_replicas: 1000,
            count_replicas: 50,
            count_dt: 1e-4,
            skip_height: 0.05,
            count_deltas: vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0],
            rho_tolerance: 0.1,
            ..Default::default()
        };
        let r = excursion_count_report(&cfg).unwrap();
        assert!(r.stats.contains_key("mean_rho1"));
        assert!(r.to_json().contains("mean_rho1"));
        assert!(r.fits.contains_key("log E[N_δ] vs log δ"));
        let again = excursion_count_report(&cfg).unwrap();
        assert_eq!(r, again);

        let p = excursion_poisson_report(&ExcursionPoissonConfig { replicas: 200, dt: 1e-3, ..Default::default() }).unwrap();
        assert!(p.stats["mean"] > 0.0);
        assert_eq!(p.checks.len(), 3);
    }

    #[test]
    fn huge_threshold_gives_no_excursions() {
        let p = excursion_poisson_report(&ExcursionPoissonConfig { replicas: 100, dt: 1e-3, threshold: 1e12, ..Default::default() })
            .unwrap();
        assert_eq!(p.stats["mean"], 0.0);
    }
}
