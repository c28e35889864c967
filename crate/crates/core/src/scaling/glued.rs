//! Reports on glued disks and on the flat counterexample.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disk::boundary_arc_distances;
use super::stats::{mean, quantile};
use super::{Report, SeedManifest};
use crate::diskmetric::{build_disk, DiskParams};
use crate::gluing::{flat_counterexample, glue_disks, GluedSpace, Orientation};
use crate::rng::SeedRecord;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GluedEnsembleConfig {
    pub n: usize,
    pub perimeter: f64,
    pub area: f64,
    pub replicas: usize,
    pub orientation: Orientation,
    pub seed: SeedRecord,
}

impl Default for GluedEnsembleConfig {
    fn default() -> Self {
        Self { n: 1 << 13, perimeter: 1.0, area: 1.0, replicas: 10, orientation: Orientation::Reversed, seed: SeedRecord::new(12, 0) }
    }
}

/// Pairs of disks glued along their whole boundaries.
pub fn build_glued_ensemble(cfg: &GluedEnsembleConfig) -> Result<Vec<Arc<GluedSpace>>> {
    let ell = cfg.perimeter;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let s = cfg.seed.child(i as u64);
            let d1 = build_disk(&DiskParams::fixed(ell, cfg.area, cfg.n, s.child(0)))?;
            let d2 = build_disk(&DiskParams::fixed(ell, cfg.area, cfg.n, s.child(1)))?;
            glue_disks(Arc::new(d1), Arc::new(d2), ([0.0, ell], [0.0, ell]), cfg.orientation).map(Arc::new)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GluedLocalityConfig {
    pub centers_per_space: usize,
    /// Centers lie within this distance of the interface.
    pub near: f64,
    pub volume_deltas: Vec<f64>,
    pub volume_band: (f64, f64),
    pub geodesics_per_space: usize,
    /// Must satisfy `δ² ≥` interface resolution.
    pub crossing_deltas: Vec<f64>,
    pub v: f64,
    pub holder_sources: usize,
    pub holder_cells: Vec<usize>,
    pub holder_band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for GluedLocalityConfig {
    fn default() -> Self {
        Self {
            centers_per_space: 16,
            near: 0.05,
            volume_deltas: super::geometric_sweep(0.1, 0.8, 7),
            volume_band: (3.3, 4.7),
            geodesics_per_space: 8,
            crossing_deltas: super::geometric_sweep(0.15, 0.6, 5),
            v: 0.3,
            holder_sources: 8,
            holder_cells: vec![2, 4, 8, 16, 32],
            holder_band: (0.4, 0.6),
            seed: SeedRecord::new(13, 0),
        }
    }
}

struct SpaceObs {
    volumes: Vec<Vec<Option<f64>>>,
    crossings: Vec<Vec<Option<f64>>>,
    ball_segments: Vec<Vec<Option<f64>>>,
    holder: Vec<Vec<Option<f64>>>,
    spacing: f64,
}

fn observe(g: &GluedSpace, cfg: &GluedLocalityConfig, seed: SeedRecord) -> Result<SpaceObs> {
    let space = &g.space;
    let mut rng = seed.rng();
    let to_iface = space.shortest_paths_multi(&g.interface_vertices(), cfg.near)?;
    let near: Vec<f64> =
        space.area_weight().iter().zip(&to_iface.dist).map(|(&a, &d)| if d <= cfg.near { a } else { 0.0 }).collect();
    let near = WeightedIndex::new(&near).map_err(|e| Error::InvalidParameter(format!("near-interface sampling: {e}")))?;
    let anywhere = WeightedIndex::new(space.area_weight()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let dmax = cfg.volume_deltas.iter().cloned().fold(0.0, f64::max);

    let mut volumes = Vec::new();
    let mut ball_segments = Vec::new();
    for _ in 0..cfg.centers_per_space {
        let c = near.sample(&mut rng);
        let sp = space.shortest_paths(c, dmax)?;
        volumes.push(
            cfg.volume_deltas
                .iter()
                .map(|&d| Some(sp.dist.iter().zip(space.area_weight()).filter(|(x, _)| **x < d).map(|(_, a)| a).sum()))
                .collect(),
        );
        ball_segments.push(
            cfg.crossing_deltas.iter().map(|&d| g.ball_segment_count(c, d, cfg.v).ok().map(|k| k as f64)).collect(),
        );
    }
    let mut crossings = Vec::new();
    for _ in 0..cfg.geodesics_per_space {
        let (a, b) = (anywhere.sample(&mut rng), anywhere.sample(&mut rng));
        let path = space.geodesic(a, b)?.unwrap_or_default();
        crossings.push(
            cfg.crossing_deltas.iter().map(|&d| g.crossing_count(&path, d).ok().map(|k| k as f64)).collect(),
        );
    }
    // one-sided: distances along the interface inside the first piece only
    let inside = space.internal_metric(&space.piece_range(0).collect::<Vec<_>>())?;
    let holder = boundary_arc_distances(&inside, 0, cfg.holder_sources, &cfg.holder_cells)?;
    let bnd = space.boundary(0);
    let spacing = bnd.windows(2).map(|w| w[1].coord - w[0].coord).fold(0.0, f64::max);
    Ok(SpaceObs { volumes, crossings, ball_segments, holder, spacing })
}

fn means(scales: &[f64], obs: &[Vec<Option<f64>>]) -> Vec<(f64, f64)> {
    scales
        .iter()
        .enumerate()
        .filter_map(|(k, &s)| {
            let v: Vec<f64> = obs.iter().filter_map(|o| o[k]).collect();
            (!v.is_empty() && mean(&v) > 0.0).then(|| (s, mean(&v)))
        })
        .collect()
}

/// Ball volumes near the interface, interface crossings of geodesics,
/// interface segments met by small balls, and one-sided interface Hölder
/// regularity.
pub fn glued_locality_report(spaces: &[Arc<GluedSpace>], cfg: &GluedLocalityConfig) -> Result<Report> {
    let mut report = Report::new("glued-locality", cfg, SeedManifest { base: cfg.seed, replicas: spaces.len() });
    let obs: Vec<SpaceObs> =
        spaces.par_iter().enumerate().map(|(i, g)| observe(g, cfg, cfg.seed.child(i as u64))).collect::<Result<_>>()?;
    let r = spaces.len();
    let flat = |f: fn(&SpaceObs) -> &Vec<Vec<Option<f64>>>| -> Vec<Vec<Option<f64>>> {
        obs.iter().flat_map(|o| f(o).iter().cloned()).collect()
    };

    if let Some(f) = report.fit("log μ(B_δ) vs log δ near interface", means(&cfg.volume_deltas, &flat(|o| &o.volumes)), r) {
        report.check("near-interface ball-volume exponent", f.slope, Some(cfg.volume_band.0), Some(cfg.volume_band.1));
    }
    let crossings = means(&cfg.crossing_deltas, &flat(|o| &o.crossings));
    if let Some(f) = report.fit("log crossings vs log δ", crossings, r) {
        report.stat("crossing exponent", -f.slope);
        report.check("crossing exponent + 2·stderr", -f.slope + 2.0 * f.stderr, None, Some(1.0));
    }
    let balls = flat(|o| &o.ball_segments);
    for (k, &d) in cfg.crossing_deltas.iter().enumerate() {
        let v: Vec<f64> = balls.iter().filter_map(|o| o[k]).collect();
        if !v.is_empty() {
            report.stat(&format!("ball segments p95[δ={d:.4}]"), quantile(&v, 0.95));
        }
    }
    if let Some(f) = report.fit("log ball segments vs log δ", means(&cfg.crossing_deltas, &balls), r) {
        report.check("ball-segment growth exponent", -f.slope, None, Some(cfg.v));
    }
    let spacing = obs.first().map_or(1.0, |o| o.spacing);
    let scales: Vec<f64> = cfg.holder_cells.iter().map(|&c| c as f64 * spacing).collect();
    if let Some(f) = report.fit("log d_internal vs log ν-arc", means(&scales, &flat(|o| &o.holder)), r) {
        report.check("one-sided interface Hölder exponent", f.slope, Some(cfg.holder_band.0), Some(cfg.holder_band.1));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlatConfig {
    pub m: usize,
    pub sources: usize,
    pub min_separation: f64,
    pub band: (f64, f64),
}

impl Default for FlatConfig {
    fn default() -> Self {
        Self { m: 256, sources: 17, min_separation: 0.25, band: (0.45, 0.55) }
    }
}

pub fn flat_counterexample_report(cfg: &FlatConfig) -> Result<Report> {
    let mut report = Report::new("flat-counterexample", cfg, SeedManifest { base: SeedRecord::new(0, 0), replicas: 1 });
    let flat = flat_counterexample(cfg.m)?.report(cfg.sources, cfg.min_separation)?;
    report.stat("pairs", flat.pairs.len() as f64);
    report.stat("ratio_mean", flat.ratio_mean);
    report.check("min d̃/d", flat.ratio_min, Some(cfg.band.0), Some(cfg.band.1));
    report.check("max d̃/d", flat.ratio_max, Some(cfg.band.0), Some(cfg.band.1));
    report.pairs.insert("glued vs plain".into(), flat.pairs.iter().map(|p| (p.plain, p.glued)).collect());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_report_passes_at_moderate_m() {
        let r = flat_counterexample_report(&FlatConfig { m: 64, sources: 9, ..Default::default() }).unwrap();
        assert!(r.passed(), "{}", r.to_table());
    }

    #[test]
    fn glued_report_runs_on_small_disks() {
        let g = build_glued_ensemble(&GluedEnsembleConfig { n: 1025, replicas: 1, ..Default::default() }).unwrap();
        let cfg = GluedLocalityConfig {
            centers_per_space: 3,
            geodesics_per_space: 3,
            crossing_deltas: vec![0.25, 0.5, 0.9],
            holder_sources: 2,
            holder_cells: vec![1, 2, 4],
            ..Default::default()
        };
        let r = glued_locality_report(&g, &cfg).unwrap();
        assert!(r.fits.contains_key("log crossings vs log δ"), "{}", r.to_table());
        assert_eq!(r.to_json(), glued_locality_report(&g, &cfg).unwrap().to_json());
    }
}
