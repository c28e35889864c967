//! Driving paths: Brownian motion, bridges and first-passage contours.
//!
//! All samplers are pure functions of their parameters and a [`SeedRecord`].
//! Two discretizations are supported: i.i.d. Gaussian increments and the
//! `±√dt` walk. The walk is what the stack-based label sampler needs, since
//! tree vertices are then exact repeated heights.

mod io;
mod ladder;

pub use io::{read_path, read_path_csv, write_path, write_path_csv};
pub(crate) use io::{read_f64, read_u64};
pub use ladder::{bridge_minimum, path_infimum, sample_ladder, Ladder, LadderExcursion};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::rng::{SeedRecord, StreamRng};
use crate::Result;

/// Upper bound on steps for a stopped path before the replica is aborted.
pub const DEFAULT_MAX_STEPS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Bm,
    Bridge,
    FirstPassageBridge,
    StoppedBm,
    Excursion,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    #[default]
    Gaussian,
    Walk,
}

/// A real-valued process on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    values: Vec<f64>,
    dt: f64,
    kind: PathKind,
    mode: Discretization,
    seed: SeedRecord,
}

impl PathSample {
    /// Validates the per-kind invariants and wraps the values.
    pub fn new(
        values: Vec<f64>,
        dt: f64,
        kind: PathKind,
        mode: Discretization,
        seed: SeedRecord,
    ) -> Result<Self> {
        ensure!(values.len() >= 2, InvalidParameter, "n must be ≥ 2");
        ensure!(dt > 0.0 && dt.is_finite(), InvalidParameter, "dt must be positive");
        ensure!(values.iter().all(|v| v.is_finite()), InvalidStructure, "non-finite path value");
        let first = values[0];
        let last = values[values.len() - 1];
        let interior = &values[1..values.len() - 1];
        match kind {
            PathKind::Bm => {}
            PathKind::Bridge => {
                ensure!(first == 0.0 && last == 0.0, InvalidStructure, "bridge must be pinned at 0");
            }
            PathKind::FirstPassageBridge | PathKind::StoppedBm => {
                ensure!(first > 0.0, InvalidStructure, "first-passage path must start above 0");
                ensure!(last == 0.0, InvalidStructure, "first-passage path must end at 0");
                ensure!(interior.iter().all(|&v| v > 0.0), InvalidStructure, "interior must stay above 0");
            }
            PathKind::Excursion => {
                ensure!(first == 0.0 && last == 0.0, InvalidStructure, "excursion must start and end at 0");
                ensure!(interior.iter().all(|&v| v > 0.0), InvalidStructure, "excursion interior must be positive");
            }
        }
        Ok(Self { values, dt, kind, mode, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn mode(&self) -> Discretization {
        self.mode
    }

    pub fn seed(&self) -> SeedRecord {
        self.seed
    }

    pub fn duration(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Walk step height `√dt`; meaningful for walk-mode paths.
    pub fn step(&self) -> f64 {
        self.dt.sqrt()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_grid(n: usize, dt: f64) -> Result<()> {
    ensure!(n >= 2, InvalidParameter, "n must be ≥ 2");
    ensure!(dt > 0.0 && dt.is_finite(), InvalidParameter, "dt must be positive");
    Ok(())
}

#[inline]
fn increment(rng: &mut StreamRng, mode: Discretization, sd: f64) -> f64 {
    match mode {
        Discretization::Gaussian => sd * rng.sample::<f64, _>(StandardNormal),
        Discretization::Walk => {
            if rng.random::<bool>() {
                sd
            } else {
                -sd
            }
        }
    }
}

/// Brownian motion on `n` grid points started from `start`.
pub fn sample_bm(n: usize, dt: f64, start: f64, mode: Discretization, seed: SeedRecord) -> Result<PathSample> {
    check_grid(n, dt)?;
    let mut rng = seed.rng();
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n);
    let mut x = start;
    values.push(x);
    for _ in 1..n {
        x += increment(&mut rng, mode, sd);
        values.push(x);
    }
    PathSample::new(values, dt, PathKind::Bm, mode, seed)
}

/// `scale` times a Brownian bridge from 0 to 0 of duration `(n-1)·dt`.
pub fn sample_bridge(n: usize, dt: f64, scale: f64, seed: SeedRecord) -> Result<PathSample> {
    check_grid(n, dt)?;
    ensure!(scale > 0.0 && scale.is_finite(), InvalidParameter, "bridge scale must be positive");
    let mut values = gaussian_bridge(n, dt, 0.0, &mut seed.rng());
    for v in &mut values {
        *v *= scale;
    }
    values[0] = 0.0;
    values[n - 1] = 0.0;
    PathSample::new(values, dt, PathKind::Bridge, Discretization::Gaussian, seed)
}

/// Brownian bridge from 0 to `end` on `n` points: `W_t - (t/T)(W_T - end)`.
fn gaussian_bridge(n: usize, dt: f64, end: f64, rng: &mut StreamRng) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut w = Vec::with_capacity(n);
    let mut x = 0.0;
    w.push(0.0);
    for _ in 1..n {
        x += sd * rng.sample::<f64, _>(StandardNormal);
        w.push(x);
    }
    let total = w[n - 1] - end;
    let last = (n - 1) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        *v -= (i as f64 / last) * total;
    }
    w[n - 1] = end;
    w
}

/// Brownian motion from `ell` stopped at the first grid time it reaches 0.
///
/// In walk mode the step is adjusted to `h = ell / round(ell/√dt)` so that 0
/// is hit exactly; the recorded `dt` is `h²`. Gaussian paths are clamped to 0
/// at the first grid value `≤ 0`. Exceeding `max_steps` is a resource-limit
/// error so that callers can count aborted replicas.
pub fn sample_stopped_bm(
    ell: f64,
    dt: f64,
    mode: Discretization,
    max_steps: usize,
    seed: SeedRecord,
) -> Result<PathSample> {
    ensure!(ell > 0.0 && ell.is_finite(), InvalidParameter, "ℓ must be positive");
    ensure!(dt > 0.0 && dt.is_finite(), InvalidParameter, "dt must be positive");
    let mut rng = seed.rng();
    match mode {
        Discretization::Gaussian => {
            let sd = dt.sqrt();
            let mut values = vec![ell];
            let mut x = ell;
            loop {
                ensure!(values.len() <= max_steps, ResourceLimit, "stopped path exceeded {max_steps} steps");
                x += sd * rng.sample::<f64, _>(StandardNormal);
                if x <= 0.0 {
                    values.push(0.0);
                    break;
                }
                values.push(x);
            }
            PathSample::new(values, dt, PathKind::StoppedBm, mode, seed)
        }
        Discretization::Walk => {
            let levels = (ell / dt.sqrt()).round().max(1.0) as i64;
            let h = ell / levels as f64;
            let mut heights = vec![levels];
            let mut k = levels;
            while k > 0 {
                ensure!(heights.len() <= max_steps, ResourceLimit, "stopped walk exceeded {max_steps} steps");
                k += if rng.random::<bool>() { 1 } else { -1 };
                heights.push(k);
            }
            let values = heights.into_iter().map(|k| k as f64 * h).collect();
            PathSample::new(values, h * h, PathKind::StoppedBm, mode, seed)
        }
    }
}

/// Brownian motion from `ell` conditioned to first hit 0 at time `a`.
///
/// Sampled as the time reversal of a three-dimensional Bessel bridge from 0
/// to `ell`: the modulus of a 3-d Brownian bridge from the origin to
/// `(ell, 0, 0)`.
pub fn sample_first_passage_bridge(ell: f64, a: f64, n: usize, seed: SeedRecord) -> Result<PathSample> {
    ensure!(ell > 0.0 && ell.is_finite(), InvalidParameter, "ℓ must be positive");
    ensure!(a > 0.0 && a.is_finite(), InvalidParameter, "a must be positive");
    ensure!(n >= 2, InvalidParameter, "n must be ≥ 2");
    let dt = a / (n - 1) as f64;
    let mut rng = seed.rng();
    let b1 = gaussian_bridge(n, dt, ell, &mut rng);
    let b2 = gaussian_bridge(n, dt, 0.0, &mut rng);
    let b3 = gaussian_bridge(n, dt, 0.0, &mut rng);
    let mut values: Vec<f64> = (0..n)
        .rev()
        .map(|i| (b1[i] * b1[i] + b2[i] * b2[i] + b3[i] * b3[i]).sqrt())
        .collect();
    values[0] = ell;
    values[n - 1] = 0.0;
    PathSample::new(values, dt, PathKind::FirstPassageBridge, Discretization::Gaussian, seed)
}

/// Walk-mode geometry for a first-passage contour of area `a` and length `ell`.
///
/// Returns `(steps, levels, h)` with `levels·h = ell` exactly and
/// `steps·h² = a` up to one step; `steps ≡ levels (mod 2)`.
pub fn walk_geometry(ell: f64, a: f64, n: usize) -> Result<(usize, usize, f64)> {
    ensure!(ell > 0.0 && ell.is_finite(), InvalidParameter, "ℓ must be positive");
    ensure!(a > 0.0 && a.is_finite(), InvalidParameter, "a must be positive");
    ensure!(n >= 2, InvalidParameter, "n must be ≥ 2");
    let levels = (ell * ((n - 1) as f64 / a).sqrt()).round().max(1.0) as usize;
    let h = ell / levels as f64;
    let mut steps = (a / (h * h)).round() as usize;
    if steps % 2 != levels % 2 {
        // pick the parity-correct neighbour closest to the target area
        let up = steps + 1;
        let down = steps.saturating_sub(1);
        steps = if (up as f64 * h * h - a).abs() <= (down as f64 * h * h - a).abs() || down < levels {
            up
        } else {
            down
        };
    }
    ensure!(
        steps >= levels,
        InvalidParameter,
        "grid too coarse: {steps} steps cannot descend {levels} levels"
    );
    Ok((steps, levels, h))
}

/// Uniform `±h` walk from `ell` to 0 that first hits 0 at its last step.
///
/// A uniform arrangement of the steps is rotated to one of its exactly
/// `levels` first-passage rotations (cycle lemma), chosen uniformly.
pub fn sample_first_passage_walk(ell: f64, a: f64, n: usize, seed: SeedRecord) -> Result<PathSample> {
    let (steps, levels, h) = walk_geometry(ell, a, n)?;
    let mut rng = seed.rng();
    let heights = first_passage_heights(steps, levels, &mut rng);
    let values = heights.into_iter().map(|k| k as f64 * h).collect();
    PathSample::new(values, h * h, PathKind::FirstPassageBridge, Discretization::Walk, seed)
}

/// Integer heights of a uniform walk from `levels` that first hits 0 at `steps`.
pub(crate) fn first_passage_heights(steps: usize, levels: usize, rng: &mut StreamRng) -> Vec<i64> {
    debug_assert!(steps >= levels && (steps - levels) % 2 == 0);
    let downs = (steps + levels) / 2;
    let mut moves: Vec<i8> = (0..steps).map(|i| if i < downs { -1 } else { 1 }).collect();
    moves.shuffle(rng);

    let mut partial = Vec::with_capacity(steps + 1);
    partial.push(0i64);
    for &m in &moves {
        partial.push(partial[partial.len() - 1] + m as i64);
    }
    // suffix minima over the open range (i, steps)
    let mut open_min = vec![i64::MAX; steps + 1];
    for i in (0..steps.saturating_sub(1)).rev() {
        open_min[i] = open_min[i + 1].min(partial[i + 1]);
    }
    let lv = levels as i64;
    let mut good = Vec::with_capacity(levels);
    let mut prefix_min = i64::MAX;
    for i in 0..steps {
        let s = partial[i];
        if s < prefix_min && open_min[i] > s - lv {
            good.push(i);
        }
        prefix_min = prefix_min.min(s);
    }
    debug_assert_eq!(good.len(), levels, "cycle lemma count");
    let start = good[rng.random_range(0..good.len())];

    let mut heights = Vec::with_capacity(steps + 1);
    let mut k = lv;
    heights.push(k);
    for j in 0..steps {
        k += moves[(start + j) % steps] as i64;
        heights.push(k);
    }
    heights
}

/// Uniform discrete excursion of unit duration with `2·half_len + 2` steps.
///
/// An up-step followed by a uniform first passage from height 1, so the
/// interior is strictly positive.
pub fn sample_unit_excursion(half_len: usize, seed: SeedRecord) -> Result<PathSample> {
    ensure!(half_len >= 1, InvalidParameter, "excursion needs at least one inner step pair");
    let steps = 2 * half_len + 2;
    let dt = 1.0 / steps as f64;
    let h = dt.sqrt();
    let mut rng = seed.rng();
    let tail = first_passage_heights(steps - 1, 1, &mut rng);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    values.extend(tail.into_iter().map(|k| k as f64 * h));
    PathSample::new(values, dt, PathKind::Excursion, Discretization::Walk, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(s: u64) -> SeedRecord {
        SeedRecord::new(s, 0)
    }

    #[test]
    fn bm_starts_at_initial_condition() {
        let p = sample_bm(2, 1.0, 5.0, Discretization::Gaussian, seed(1)).unwrap();
        assert_eq!(p.first(), 5.0);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn bm_is_deterministic() {
        let a = sample_bm(1000, 0.01, 0.0, Discretization::Gaussian, seed(9)).unwrap();
        let b = sample_bm(1000, 0.01, 0.0, Discretization::Gaussian, seed(9)).unwrap();
        assert_eq!(a.values(), b.values());
        let c = sample_bm(1000, 0.01, 0.0, Discretization::Gaussian, SeedRecord::new(9, 1)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn bm_rejects_bad_grid() {
        assert!(matches!(
            sample_bm(1, 1.0, 0.0, Discretization::Gaussian, seed(1)),
            Err(crate::Error::InvalidParameter(_))
        ));
        assert!(sample_bm(5, 0.0, 0.0, Discretization::Gaussian, seed(1)).is_err());
    }

    #[test]
    fn walk_steps_are_plus_minus_sqrt_dt() {
        let p = sample_bm(200, 0.25, 0.0, Discretization::Walk, seed(3)).unwrap();
        for w in p.values().windows(2) {
            assert_eq!((w[1] - w[0]).abs(), 0.5);
        }
    }

    #[test]
    fn bridge_is_pinned() {
        for s in 0..20 {
            let p = sample_bridge(64, 1.0 / 63.0, 3f64.sqrt(), seed(s)).unwrap();
            assert_eq!(p.first(), 0.0);
            assert_eq!(p.last(), 0.0);
        }
    }

    #[test]
    fn bridge_rejects_zero_scale() {
        assert!(matches!(sample_bridge(10, 0.1, 0.0, seed(1)), Err(crate::Error::InvalidParameter(_))));
    }

    #[test]
    fn stopped_bm_stopping_rule() {
        for mode in [Discretization::Gaussian, Discretization::Walk] {
            for s in 0..10 {
                let p = sample_stopped_bm(1.0, 1e-3, mode, DEFAULT_MAX_STEPS, seed(s)).unwrap();
                assert_eq!(p.first(), 1.0);
                assert_eq!(p.last(), 0.0);
                let v = p.values();
                assert!(v[1..v.len() - 1].iter().all(|&x| x > 0.0));
            }
        }
        assert!(matches!(
            sample_stopped_bm(0.0, 1e-3, Discretization::Gaussian, 10, seed(1)),
            Err(crate::Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn stopped_bm_guard_reports_resource_limit() {
        let r = sample_stopped_bm(10.0, 1e-6, Discretization::Gaussian, 100, seed(1));
        assert!(matches!(r, Err(crate::Error::ResourceLimit(_))));
    }

    #[test]
    fn first_passage_bridge_conditioning_event() {
        for s in 0..20 {
            let p = sample_first_passage_bridge(1.0, 1.0, 257, seed(s)).unwrap();
            let v = p.values();
            assert_eq!(v[0], 1.0);
            assert_eq!(v[256], 0.0);
            assert!(v[1..256].iter().all(|&x| x > 0.0));
            assert!((p.duration() - 1.0).abs() < 1e-12);
        }
        assert!(sample_first_passage_bridge(-1.0, 1.0, 10, seed(1)).is_err());
        assert!(sample_first_passage_bridge(1.0, 0.0, 10, seed(1)).is_err());
    }

    #[test]
    fn first_passage_walk_hits_zero_only_at_end() {
        for s in 0..50 {
            let p = sample_first_passage_walk(1.0, 1.0, 1025, seed(s)).unwrap();
            let v = p.values();
            let h = p.step();
            assert!((v[0] - 1.0).abs() < 1e-12);
            assert_eq!(*v.last().unwrap(), 0.0);
            assert!(v[1..v.len() - 1].iter().all(|&x| x > 0.0));
            for w in v.windows(2) {
                assert!(((w[1] - w[0]).abs() - h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn walk_geometry_matches_area_and_length() {
        let (steps, levels, h) = walk_geometry(1.0, 1.0, 16385).unwrap();
        assert_eq!(levels, 128);
        assert_eq!(steps, 16384);
        assert!((levels as f64 * h - 1.0).abs() < 1e-15);
        let (steps, levels, h) = walk_geometry(0.7, 2.0, 5000).unwrap();
        assert_eq!(steps % 2, levels % 2);
        assert!((steps as f64 * h * h - 2.0).abs() <= 1.5 * h * h);
    }

    #[test]
    fn cycle_lemma_finds_exactly_levels_rotations() {
        // brute-force check of the rotation criterion on small walks
        let mut rng = seed(11).rng();
        for _ in 0..200 {
            let levels = rng.random_range(1..5usize);
            let steps = levels + 2 * rng.random_range(0..6usize);
            let heights = first_passage_heights(steps, levels, &mut rng);
            assert_eq!(heights[0], levels as i64);
            assert_eq!(heights[steps], 0);
            assert!(heights[..steps].iter().all(|&k| k > 0));
        }
    }

    #[test]
    fn unit_excursion_shape() {
        let p = sample_unit_excursion(64, seed(2)).unwrap();
        assert_eq!(p.len(), 131);
        assert!((p.duration() - 1.0).abs() < 1e-12);
    }
}
