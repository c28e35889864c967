//! Metric reports on ensembles of single disks.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{ks_two_sample, mean};
use super::{Report, SeedManifest};
use crate::diskmetric::{build_disk, DiskInstance, DiskParams, FiniteGeodesicSpace, ShortestPaths};
use crate::rng::SeedRecord;
use crate::sampler::Discretization;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n: usize,
    pub perimeter: f64,
    pub area: f64,
    pub replicas: usize,
    pub mode: Discretization,
    pub seed: SeedRecord,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n: 1 << 14, perimeter: 1.0, area: 1.0, replicas: 20, mode: Discretization::Walk, seed: SeedRecord::new(8, 0) }
    }
}

impl EnsembleConfig {
    fn params(&self, i: usize) -> DiskParams {
        DiskParams::fixed(self.perimeter, self.area, self.n, self.seed.child(i as u64)).with_mode(self.mode)
    }
}

pub fn build_ensemble(cfg: &EnsembleConfig) -> Result<Vec<Arc<DiskInstance>>> {
    (0..cfg.replicas).into_par_iter().map(|i| build_disk(&cfg.params(i)).map(Arc::new)).collect()
}

/// One row of optional observations per (center, source or arc).
type Series = Vec<Vec<Option<f64>>>;

fn manifest(disks: &[Arc<DiskInstance>], seed: SeedRecord) -> SeedManifest {
    SeedManifest { base: disks.first().map_or(seed, |d| d.params().seed), replicas: disks.len() }
}

/// Area-weighted random class: a uniform grid index mapped to its class.
pub(crate) fn area_sample(disk: &DiskInstance, rng: &mut impl Rng) -> usize {
    disk.class_of(rng.random_range(0..disk.len()))
}

fn ball_areas(sp: &ShortestPaths, area: &[f64], deltas: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; deltas.len()];
    for (d, a) in sp.dist.iter().zip(area) {
        for (k, &delta) in deltas.iter().enumerate() {
            if *d < delta {
                out[k] += a;
            }
        }
    }
    out
}

/// Mean per scale over the observations that exist at that scale.
fn scale_means(scales: &[f64], obs: &[Vec<Option<f64>>], min_count: usize) -> Vec<(f64, f64)> {
    scales
        .iter()
        .enumerate()
        .filter_map(|(k, &s)| {
            let v: Vec<f64> = obs.iter().filter_map(|o| o[k]).collect();
            (v.len() >= min_count && mean(&v) > 0.0).then(|| (s, mean(&v)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BallVolumeConfig {
    pub centers_per_disk: usize,
    pub deltas: Vec<f64>,
    /// Scales with fewer admissible balls are dropped.
    pub min_balls: usize,
    pub band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for BallVolumeConfig {
    fn default() -> Self {
        Self {
            centers_per_disk: 16,
            deltas: super::geometric_sweep(0.1, 0.8, 7),
            min_balls: 10,
            band: (3.5, 4.5),
            seed: SeedRecord::new(9, 0),
        }
    }
}

/// `μ(B_δ(z))` at area-sampled centers whose ball misses the boundary.
pub fn ball_volume_report(disks: &[Arc<DiskInstance>], cfg: &BallVolumeConfig) -> Result<Report> {
    let mut report = Report::new("ball-volume", cfg, manifest(disks, cfg.seed));
    let dmax = cfg.deltas.iter().cloned().fold(0.0, f64::max);
    let obs: Vec<Vec<Vec<Option<f64>>>> = disks
        .par_iter()
        .enumerate()
        .map(|(i, disk)| {
            let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
            let bnd: Vec<usize> = space.boundary(0).iter().map(|b| b.vertex).collect();
            let to_bdy = space.shortest_paths_multi(&bnd, dmax)?;
            let mut rng = cfg.seed.child(i as u64).rng();
            (0..cfg.centers_per_disk)
                .map(|_| {
                    let c = area_sample(disk, &mut rng);
                    let sp = space.shortest_paths(c, dmax)?;
                    let vols = ball_areas(&sp, space.area_weight(), &cfg.deltas);
                    Ok(cfg
                        .deltas
                        .iter()
                        .zip(vols)
                        .map(|(&d, v)| (to_bdy.dist[c] >= d).then_some(v))
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let obs: Vec<Vec<Option<f64>>> = obs.into_iter().flatten().collect();
    for (k, &d) in cfg.deltas.iter().enumerate() {
        report.stat(&format!("balls[δ={d:.4}]"), obs.iter().filter(|o| o[k].is_some()).count() as f64);
    }
    let pairs = scale_means(&cfg.deltas, &obs, cfg.min_balls);
    if let Some(f) = report.fit("log μ(B_δ) vs log δ", pairs, disks.len()) {
        report.check("ball-volume exponent", f.slope, Some(cfg.band.0), Some(cfg.band.1));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderConfig {
    pub sources_per_disk: usize,
    /// Arc lengths in boundary grid cells.
    pub cells: Vec<usize>,
    pub band: (f64, f64),
}

impl Default for HolderConfig {
    fn default() -> Self {
        Self { sources_per_disk: 16, cells: vec![2, 4, 8, 16, 32], band: (0.4, 0.6) }
    }
}

/// Boundary distances for arcs of `cells` grid cells, both directions, from
/// evenly spaced sources; one vector of optional distances per (source, arc).
pub(crate) fn boundary_arc_distances(space: &FiniteGeodesicSpace, piece: usize, sources: usize, cells: &[usize]) -> Result<Vec<Vec<Option<f64>>>> {
    let bnd = space.boundary(piece);
    // the last point (r = ℓ) closes the cycle onto the first
    let m = bnd.len() - 1;
    let step = (m / sources.max(1)).max(1);
    let mut out = Vec::new();
    for s in (0..m).step_by(step).take(sources) {
        let sp = space.shortest_paths(bnd[s].vertex, f64::INFINITY)?;
        for dir in [1isize, -1] {
            out.push(
                cells
                    .iter()
                    .map(|&c| {
                        (c < m).then(|| {
                            let t = (s as isize + dir * c as isize).rem_euclid(m as isize) as usize;
                            sp.dist[bnd[t].vertex]
                        })
                    })
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// `d(p(T_r), p(T_{r+ε}))` against the boundary length `ε`.
pub fn holder_boundary_report(disks: &[Arc<DiskInstance>], cfg: &HolderConfig) -> Result<Report> {
    let mut report = Report::new("holder-boundary", cfg, manifest(disks, SeedRecord::new(0, 0)));
    let spacing = disks.first().map_or(1.0, |d| d.hitting_times().spacing());
    let scales: Vec<f64> = cfg.cells.iter().map(|&c| c as f64 * spacing).collect();
    let obs: Vec<Vec<Option<f64>>> = disks
        .par_iter()
        .map(|disk| boundary_arc_distances(&FiniteGeodesicSpace::from_disk(disk.clone())?, 0, cfg.sources_per_disk, &cfg.cells))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let pairs = scale_means(&scales, &obs, 1);
    if let Some(f) = report.fit("log d vs log ν-arc", pairs, disks.len()) {
        report.check("boundary Hölder exponent", f.slope, Some(cfg.band.0), Some(cfg.band.1));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArcNeighborhoodConfig {
    pub arcs_per_disk: usize,
    /// Arc length for the δ sweep.
    pub arc_length: f64,
    pub deltas: Vec<f64>,
    /// Radius for the arc-length sweep.
    pub delta: f64,
    pub lengths: Vec<f64>,
    pub delta_band: (f64, f64),
    pub length_band: (f64, f64),
    pub seed: SeedRecord,
}

impl Default for ArcNeighborhoodConfig {
    fn default() -> Self {
        Self {
            arcs_per_disk: 4,
            arc_length: 0.5,
            deltas: super::geometric_sweep(0.08, 0.3, 5),
            delta: 0.1,
            lengths: super::dyadic_sweep(1.0 / 32.0, 4),
            delta_band: (1.6, 2.4),
            length_band: (0.8, 1.2),
            seed: SeedRecord::new(10, 0),
        }
    }
}

fn arc_vertices(space: &FiniteGeodesicSpace, start: f64, len: f64, ell: f64) -> Vec<usize> {
    space
        .boundary(0)
        .iter()
        .filter(|b| (b.coord - start).rem_euclid(ell) <= len + 1e-12)
        .map(|b| b.vertex)
        .collect()
}

/// `μ(B_δ(arc))` against `δ` (fixed arc) and against the arc length (fixed `δ`).
pub fn arc_neighborhood_report(disks: &[Arc<DiskInstance>], cfg: &ArcNeighborhoodConfig) -> Result<Report> {
    let mut report = Report::new("arc-neighborhood", cfg, manifest(disks, cfg.seed));
    let dmax = cfg.deltas.iter().cloned().fold(cfg.delta, f64::max);
    let per_disk: Vec<(Series, Series)> = disks
        .par_iter()
        .enumerate()
        .map(|(i, disk)| {
            let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
            let ell = disk.perimeter();
            let mut rng = cfg.seed.child(i as u64).rng();
            let mut by_delta = Vec::new();
            let mut by_len = Vec::new();
            for _ in 0..cfg.arcs_per_disk {
                let start = rng.random::<f64>() * ell;
                let sp = space.shortest_paths_multi(&arc_vertices(&space, start, cfg.arc_length, ell), dmax)?;
                by_delta.push(ball_areas(&sp, space.area_weight(), &cfg.deltas).into_iter().map(Some).collect());
                let mut row = Vec::new();
                for &len in &cfg.lengths {
                    let sp = space.shortest_paths_multi(&arc_vertices(&space, start, len, ell), cfg.delta)?;
                    row.push(Some(ball_areas(&sp, space.area_weight(), &[cfg.delta])[0]));
                }
                by_len.push(row);
            }
            Ok((by_delta, by_len))
        })
        .collect::<Result<_>>()?;
    let (by_delta, by_len): (Vec<_>, Vec<_>) = per_disk.into_iter().unzip();
    let by_delta: Vec<_> = by_delta.into_iter().flatten().collect();
    let by_len: Vec<_> = by_len.into_iter().flatten().collect();
    if let Some(f) = report.fit("log μ(B_δ(arc)) vs log δ", scale_means(&cfg.deltas, &by_delta, 1), disks.len()) {
        report.check("arc-neighborhood δ exponent", f.slope, Some(cfg.delta_band.0), Some(cfg.delta_band.1));
    }
    if let Some(f) = report.fit("log μ(B_δ(arc)) vs log ν(arc)", scale_means(&cfg.lengths, &by_len, 1), disks.len()) {
        report.check("arc-neighborhood length exponent", f.slope, Some(cfg.length_band.0), Some(cfg.length_band.1));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfConsistencyConfig {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub replicas: usize,
    pub perimeter: f64,
    pub area: f64,
    /// Boundary-length coordinates of the two endpoints.
    pub r_pair: (f64, f64),
    pub ks_alpha: f64,
    pub mean_tolerance: f64,
    pub seed: SeedRecord,
}

impl Default for SelfConsistencyConfig {
    fn default() -> Self {
        Self {
            n_coarse: 1 << 12,
            n_fine: 1 << 14,
            replicas: 200,
            perimeter: 1.0,
            area: 1.0,
            r_pair: (0.0, 0.5),
            ks_alpha: 0.01,
            mean_tolerance: 0.1,
            seed: SeedRecord::new(14, 0),
        }
    }
}

fn boundary_pair_distance(disk: Arc<DiskInstance>, r: (f64, f64)) -> Result<f64> {
    let space = FiniteGeodesicSpace::from_disk(disk)?;
    let bnd = space.boundary(0);
    let at = |x: f64| bnd.iter().min_by(|a, b| (a.coord - x).abs().total_cmp(&(b.coord - x).abs())).map(|b| b.vertex);
    let (s, t) = (at(r.0).unwrap_or(0), at(r.1).unwrap_or(0));
    space.distance(s, t)
}

/// Law of the distance between two fixed boundary points at two grid sizes.
pub fn self_consistency_report(cfg: &SelfConsistencyConfig) -> Result<Report> {
    let mut report = Report::new("self-consistency", cfg, SeedManifest { base: cfg.seed, replicas: cfg.replicas });
    let sample = |n: usize, tag: u64| -> Result<Vec<f64>> {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|i| {
                let p = DiskParams::fixed(cfg.perimeter, cfg.area, n, cfg.seed.child(tag).child(i as u64));
                boundary_pair_distance(Arc::new(build_disk(&p)?), cfg.r_pair)
            })
            .collect()
    };
    let coarse = sample(cfg.n_coarse, 1)?;
    let fine = sample(cfg.n_fine, 2)?;
    let ks = ks_two_sample(&coarse, &fine)?;
    let (mc, mf) = (mean(&coarse), mean(&fine));
    report.stat("mean_coarse", mc);
    report.stat("mean_fine", mf);
    report.stat("ks_statistic", ks.statistic);
    report.check("KS p-value", ks.p_value, Some(cfg.ks_alpha), None);
    report.check("relative mean difference", (mf - mc).abs() / mc, Some(0.0), Some(cfg.mean_tolerance));
    report.pairs.insert("coarse".into(), coarse.iter().enumerate().map(|(i, &d)| (i as f64, d)).collect());
    report.pairs.insert("fine".into(), fine.iter().enumerate().map(|(i, &d)| (i as f64, d)).collect());
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicBoundaryConfig {
    pub ns: Vec<usize>,
    pub replicas: usize,
    pub pairs_per_disk: usize,
    pub seed: SeedRecord,
}

impl Default for GeodesicBoundaryConfig {
    fn default() -> Self {
        Self { ns: vec![1 << 10, 1 << 12, 1 << 14], replicas: 8, pairs_per_disk: 4, seed: SeedRecord::new(15, 0) }
    }
}

/// Fraction of geodesics between area-sampled points that touch the boundary.
pub fn geodesic_boundary_report(cfg: &GeodesicBoundaryConfig) -> Result<Report> {
    let mut report = Report::new("geodesic-boundary", cfg, SeedManifest { base: cfg.seed, replicas: cfg.replicas });
    let mut fractions = Vec::new();
    for (k, &n) in cfg.ns.iter().enumerate() {
        let hits: Vec<f64> = (0..cfg.replicas)
            .into_par_iter()
            .map(|i| {
                let s = cfg.seed.child(k as u64).child(i as u64);
                let disk = Arc::new(build_disk(&DiskParams::fixed(1.0, 1.0, n, s))?);
                let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
                let mut on_bdy = vec![false; space.len()];
                for b in space.boundary(0) {
                    on_bdy[b.vertex] = true;
                }
                let mut rng = s.child(1).rng();
                let mut touched = 0.0;
                for _ in 0..cfg.pairs_per_disk {
                    let (a, b) = (area_sample(&disk, &mut rng), area_sample(&disk, &mut rng));
                    let path = space.geodesic(a, b)?.unwrap_or_default();
                    if path.len() > 2 && path[1..path.len() - 1].iter().any(|&v| on_bdy[v]) {
                        touched += 1.0;
                    }
                }
                Ok(touched / cfg.pairs_per_disk as f64)
            })
            .collect::<Result<_>>()?;
        let f = mean(&hits);
        report.stat(&format!("fraction[n={n}]"), f);
        fractions.push(f);
    }
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0]);
    report.check("fraction non-increasing in n", if monotone { 1.0 } else { 0.0 }, Some(1.0), None);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Vec<Arc<DiskInstance>> {
        build_ensemble(&EnsembleConfig { n: 1025, replicas: 2, ..Default::default() }).unwrap()
    }

    #[test]
    fn ensemble_reports_run() {
        let disks = small();
        let b = ball_volume_report(&disks, &BallVolumeConfig { centers_per_disk: 4, min_balls: 1, ..Default::default() }).unwrap();
        assert!(!b.checks.is_empty());
        let h = holder_boundary_report(&disks, &HolderConfig { sources_per_disk: 4, cells: vec![1, 2, 4, 8], ..Default::default() })
            .unwrap();
        assert!(h.fits.contains_key("log d vs log ν-arc"), "{}", h.to_table());
        let a = arc_neighborhood_report(&disks, &ArcNeighborhoodConfig { arcs_per_disk: 2, ..Default::default() }).unwrap();
        assert_eq!(a.checks.len(), 2, "{}", a.to_table());
    }

    #[test]
    fn ball_area_of_huge_radius_is_total() {
        let disk = small().remove(0);
        let space = FiniteGeodesicSpace::from_disk(disk.clone()).unwrap();
        let sp = space.shortest_paths(0, f64::INFINITY).unwrap();
        let v = ball_areas(&sp, space.area_weight(), &[0.0, 1e9]);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - space.total_area()).abs() < 1e-9, "{} {}", v[1], space.total_area());
    }

    #[test]
    fn degenerate_distances_are_dropped() {
        let obs = vec![vec![Some(0.0), Some(1.0)], vec![None, Some(3.0)]];
        assert_eq!(scale_means(&[1.0, 2.0], &obs, 1), vec![(2.0, 2.0)]);
    }
}
