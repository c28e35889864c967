//! Discretized Brownian disks and their quotient metric.
//!
//! A [`DiskInstance`] is a contour, its forest code, the label field and the
//! boundary cycle. Its metric is the largest pseudometric below `d_Z` that
//! vanishes on `{d_X = 0}`: shortest paths on the complete graph over zero
//! classes with edge weight `min d_Z` over representative pairs.
//!
//! Grid index order is the counterclockwise orientation of the circle
//! `[0, a]/(0 ~ a)`.

mod io;
mod space;

pub use io::{read_disk, write_disk, DiskSummary};
pub use space::{BoundaryVertex, FiniteGeodesicSpace, Piece, ShortestPaths, DEFAULT_EDGE_CAP, MATRIX_CAP, UNREACHABLE};

use serde::{Deserialize, Serialize};

use crate::encoding::{ForestCode, HittingTimes, Partition};
use crate::error::ensure;
use crate::labels::{sample_labels_cholesky, sample_labels_snake, LabelField, DEFAULT_CHOLESKY_CAP};
use crate::rng::SeedRecord;
use crate::sampler::{
    sample_bridge, sample_first_passage_bridge, sample_first_passage_walk, sample_stopped_bm, Discretization,
    PathSample, DEFAULT_MAX_STEPS,
};
use crate::Result;

const CONTOUR_STREAM: u64 = 1;
const LABEL_STREAM: u64 = 2;
const BRIDGE_STREAM: u64 = 3;

/// Area specification for [`build_disk`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMode {
    Fixed(f64),
    /// Area equals the first hitting time of 0 by Brownian motion from `ℓ`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskParams {
    pub perimeter: f64,
    pub area: AreaMode,
    /// Requested grid points. Fixed area: the step count is adjusted by at
    /// most one so that `ℓ` is a whole number of walk steps. Random area: the
    /// grid step is `ℓ²/n` and the point count is random.
    pub n: usize,
    pub mode: Discretization,
    pub seed: SeedRecord,
    pub max_steps: usize,
    pub cholesky_cap: usize,
}

impl DiskParams {
    pub fn fixed(perimeter: f64, area: f64, n: usize, seed: SeedRecord) -> Self {
        Self {
            perimeter,
            area: AreaMode::Fixed(area),
            n,
            mode: Discretization::Walk,
            seed,
            max_steps: DEFAULT_MAX_STEPS,
            cholesky_cap: DEFAULT_CHOLESKY_CAP,
        }
    }

    pub fn random_area(perimeter: f64, n: usize, seed: SeedRecord) -> Self {
        Self { area: AreaMode::Random, ..Self::fixed(perimeter, 1.0, n, seed) }
    }

    pub fn with_mode(mut self, mode: Discretization) -> Self {
        self.mode = mode;
        self
    }
}

/// One point of the boundary cycle: grid index `T_r` and its length coordinate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub index: usize,
    pub r: f64,
}

#[derive(Clone, Debug)]
pub struct DiskInstance {
    params: DiskParams,
    code: ForestCode,
    hits: HittingTimes,
    labels: LabelField,
    area: f64,
    boundary: Vec<BoundaryPoint>,
    class_area: Vec<f64>,
}

/// Samples contour, labels and bridge, then assembles the disk.
pub fn build_disk(params: &DiskParams) -> Result<DiskInstance> {
    ensure!(params.perimeter > 0.0 && params.perimeter.is_finite(), InvalidParameter, "ℓ must be positive");
    ensure!(params.n >= 2, InvalidParameter, "n must be ≥ 2");
    let ell = params.perimeter;
    let contour_seed = params.seed.child(CONTOUR_STREAM);
    let contour = match (params.area, params.mode) {
        (AreaMode::Fixed(a), Discretization::Walk) => sample_first_passage_walk(ell, a, params.n, contour_seed)?,
        (AreaMode::Fixed(a), Discretization::Gaussian) => sample_first_passage_bridge(ell, a, params.n, contour_seed)?,
        (AreaMode::Random, mode) => {
            sample_stopped_bm(ell, ell * ell / params.n as f64, mode, params.max_steps, contour_seed)?
        }
    };
    let code = ForestCode::new(contour)?;
    let z0 = match params.mode {
        Discretization::Walk => sample_labels_snake(&code, params.seed.child(LABEL_STREAM))?,
        Discretization::Gaussian => sample_labels_cholesky(&code, params.cholesky_cap, params.seed.child(LABEL_STREAM))?,
    };
    let hits = code.hitting_times(code.default_levels())?;
    let m = hits.levels();
    let bridge = sample_bridge(m, ell / (m - 1) as f64, 3f64.sqrt(), params.seed.child(BRIDGE_STREAM))?;
    DiskInstance::from_parts(params.clone(), code, z0, bridge)
}

impl DiskInstance {
    /// Assembles a disk from an already sampled contour, `Z⁰` and bridge.
    pub fn from_parts(params: DiskParams, code: ForestCode, z0: Vec<f64>, bridge: PathSample) -> Result<Self> {
        ensure!(z0.len() == code.len(), InvalidParameter, "label length {} ≠ contour length {}", z0.len(), code.len());
        let hits = code.hitting_times(bridge.len())?;
        let labels = LabelField::assemble(&hits, z0, bridge)?;
        Ok(Self::assemble(params, code, hits, labels))
    }

    fn assemble(params: DiskParams, code: ForestCode, hits: HittingTimes, labels: LabelField) -> Self {
        let dt = code.path().dt();
        let area = code.path().duration();
        let boundary = (0..hits.levels()).map(|k| BoundaryPoint { index: hits.time(k), r: hits.r(k) }).collect();
        let classes = code.classes();
        let class_area = (0..classes.len()).map(|c| dt * classes.members(c).len() as f64).collect();
        Self { params, code, hits, labels, area, boundary, class_area }
    }

    /// Same disk with labels rounded to multiples of `step` (exact-arithmetic oracles).
    pub fn quantized(&self, step: f64) -> Result<Self> {
        let labels = self.labels.quantized(&self.hits, step)?;
        Ok(Self::assemble(self.params.clone(), self.code.clone(), self.hits.clone(), labels))
    }

    pub fn params(&self) -> &DiskParams {
        &self.params
    }

    pub fn code(&self) -> &ForestCode {
        &self.code
    }

    pub fn hitting_times(&self) -> &HittingTimes {
        &self.hits
    }

    pub fn labels(&self) -> &LabelField {
        &self.labels
    }

    pub fn z(&self) -> &[f64] {
        self.labels.z()
    }

    /// Area `a` (contour duration).
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.hits.ell()
    }

    /// Grid point count.
    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn classes(&self) -> &Partition {
        self.code.classes()
    }

    pub fn n_classes(&self) -> usize {
        self.code.classes().len()
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.code.classes().class_of(i)
    }

    /// Area measure `μ` per class: `dt ×` class size.
    pub fn class_area(&self) -> &[f64] {
        &self.class_area
    }

    /// Boundary cycle `(T_r, r)` over the r-grid, counterclockwise from `r = 0`.
    pub fn boundary(&self) -> &[BoundaryPoint] {
        &self.boundary
    }

    /// Minimum of `Z` on the counterclockwise arc from `s` to `t`.
    pub fn underline_z(&self, s: usize, t: usize) -> Result<f64> {
        self.check(s, t)?;
        Ok(self.labels.underline(s, t))
    }

    /// `d_Z(s,t) = Z_s + Z_t - 2 max(Z̲_{s,t}, Z̲_{t,s})`.
    pub fn d_z(&self, s: usize, t: usize) -> Result<f64> {
        self.check(s, t)?;
        let z = self.z();
        let hi = self.labels.underline(s, t).max(self.labels.underline(t, s));
        Ok(label_distance(z[s], z[t], hi))
    }

    fn check(&self, s: usize, t: usize) -> Result<()> {
        let n = self.len();
        ensure!(s < n && t < n, InvalidParameter, "index out of range ({s}, {t}) for n = {n}");
        Ok(())
    }

    /// Edge weight between two classes: `min d_Z` over representative pairs.
    pub fn class_edge(&self, a: usize, b: usize) -> f64 {
        self.best_pair(a, b).2
    }

    // (s, t, weight, forward arc s→t realizes the larger minimum)
    fn best_pair(&self, a: usize, b: usize) -> (usize, usize, f64, bool) {
        let z = self.z();
        let cl = self.classes();
        let mut best = (0, 0, f64::INFINITY, true);
        for &s in cl.members(a) {
            for &t in cl.members(b) {
                let (s, t) = (s as usize, t as usize);
                let fwd = self.labels.underline(s, t);
                let bwd = self.labels.underline(t, s);
                let w = label_distance(z[s], z[t], fwd.max(bwd));
                if w < best.2 {
                    best = (s, t, w, fwd >= bwd);
                }
            }
        }
        best
    }

    /// Relaxes every class from class `c`: calls `visit(class, weight)` once
    /// per grid index with the exact contracted edge weight.
    ///
    /// For a target index `j`, the representatives of `c` nearest to `j` on
    /// either side bound the two arcs with the largest minima, so one forward
    /// and one backward sweep suffice.
    pub(crate) fn relax_class(&self, c: usize, fwd: &mut Vec<f64>, mut visit: impl FnMut(usize, f64)) {
        let z = self.z();
        let n = z.len();
        let labels = self.classes().labels();
        let reps = self.classes().members(c);
        let cc = c as u32;
        let zc = z[reps[0] as usize];
        fwd.resize(n, 0.0);

        let first = reps[0] as usize;
        let mut m = f64::INFINITY;
        for j in (first..n).chain(0..first) {
            m = if labels[j] == cc { z[j] } else { m.min(z[j]) };
            fwd[j] = m;
        }
        let last = reps[reps.len() - 1] as usize;
        let mut m = f64::INFINITY;
        for j in (0..=last).rev().chain((last + 1..n).rev()) {
            m = if labels[j] == cc { z[j] } else { m.min(z[j]) };
            visit(labels[j] as usize, label_distance(zc, z[j], fwd[j].max(m)));
        }
    }

    /// Replaces the contracted edge `a → b` by a chain of classes of the same
    /// total length: running-minimum records of `Z` from each endpoint down to
    /// the arc minimum.
    pub fn expand_edge(&self, a: usize, b: usize) -> Vec<usize> {
        if a == b {
            return vec![a];
        }
        let (s, t, _, forward) = self.best_pair(a, b);
        let n = self.len();
        let (p, q) = if forward { (s, t) } else { (t, s) };
        let target = self.labels.underline(p, q);
        let z = self.z();
        let arc_len = if p <= q { q - p } else { q + n - p };

        let mut left = vec![p];
        let mut m = z[p];
        let mut j = p;
        while m > target {
            j = (j + 1) % n;
            if z[j] < m {
                m = z[j];
                left.push(j);
            }
        }
        let mut right = vec![q];
        let mut m = z[q];
        let mut j = q;
        let mut steps = 0;
        while m > target && steps < arc_len {
            j = (j + n - 1) % n;
            steps += 1;
            if z[j] < m {
                m = z[j];
                right.push(j);
            }
        }
        right.reverse();
        left.extend(right);
        let mut chain: Vec<usize> = Vec::with_capacity(left.len());
        for i in left {
            let c = self.class_of(i);
            if chain.last() != Some(&c) {
                chain.push(c);
            }
        }
        if !forward {
            chain.reverse();
        }
        chain
    }

    pub fn summary(&self) -> DiskSummary {
        DiskSummary::of(self)
    }
}

/// `zs + zt - 2·hi`, clamped at 0 against rounding.
#[inline]
pub(crate) fn label_distance(zs: f64, zt: f64, hi: f64) -> f64 {
    (zs + zt - 2.0 * hi).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::PathKind;

    /// Disk on a hand-written walk contour with given labels and zero bridge.
    pub(crate) fn hand_disk(x: &[f64], z0: &[f64]) -> DiskInstance {
        let path = PathSample::new(x.to_vec(), 1.0, PathKind::FirstPassageBridge, Discretization::Walk, SeedRecord::new(0, 0)).unwrap();
        let code = ForestCode::new(path).unwrap();
        let m = code.default_levels();
        let bridge = PathSample::new(vec![0.0; m], x[0] / (m - 1) as f64, PathKind::Bridge, Discretization::Gaussian, SeedRecord::new(0, 0)).unwrap();
        DiskInstance::from_parts(DiskParams::fixed(x[0], (x.len() - 1) as f64, x.len(), SeedRecord::new(0, 0)), code, z0.to_vec(), bridge).unwrap()
    }

    #[test]
    fn underline_and_d_z_hand_values() {
        let d = hand_disk(&[1.0, 2.0, 1.0, 0.0], &[1.0, 0.0, 1.0, 3.0]);
        assert_eq!(d.z(), &[1.0, 0.0, 1.0, 3.0]);
        assert_eq!(d.underline_z(0, 2).unwrap(), 0.0);
        assert_eq!(d.underline_z(2, 0).unwrap(), 1.0);
        assert_eq!(d.underline_z(3, 3).unwrap(), 3.0);
        assert_eq!(d.d_z(0, 2).unwrap(), 0.0);
        assert_eq!(d.d_z(1, 3).unwrap(), 3.0);
        assert_eq!(d.d_z(1, 2).unwrap(), 1.0);
        for i in 0..4 {
            assert_eq!(d.d_z(i, i).unwrap(), 0.0);
        }
        assert!(d.d_z(0, 4).is_err());
    }

    #[test]
    fn walk_disk_construction() {
        let d = build_disk(&DiskParams::fixed(1.0, 1.0, 4097, SeedRecord::new(3, 0))).unwrap();
        assert!((d.area() - 1.0).abs() <= d.code().path().dt());
        let total: f64 = d.class_area().iter().sum();
        assert!((total - d.area()).abs() <= 1.0001 * d.code().path().dt());
        assert_eq!(d.boundary()[0].index, 0);
        assert_eq!(d.boundary()[0].r, 0.0);
        assert_eq!(d.boundary().last().unwrap().r, 1.0);
        assert_eq!(d.boundary().last().unwrap().index, d.len() - 1);
        assert_eq!(d.z()[0], 0.0);
    }

    #[test]
    fn random_area_equals_contour_duration() {
        let d = build_disk(&DiskParams::random_area(1.0, 1024, SeedRecord::new(4, 0))).unwrap();
        assert_eq!(d.area(), d.code().path().duration());
        assert_eq!(d.code().path().kind(), PathKind::StoppedBm);
    }

    #[test]
    fn build_is_deterministic() {
        let p = DiskParams::fixed(1.0, 1.0, 1025, SeedRecord::new(8, 1));
        let a = build_disk(&p).unwrap();
        let b = build_disk(&p).unwrap();
        assert_eq!(a.z(), b.z());
        assert_eq!(a.code().values(), b.code().values());
    }

    #[test]
    fn relax_matches_brute_force_class_edges() {
        for mode in [Discretization::Walk, Discretization::Gaussian] {
            let d = build_disk(&DiskParams::fixed(1.0, 1.0, 257, SeedRecord::new(5, 2)).with_mode(mode)).unwrap();
            let k = d.n_classes();
            let mut fwd = Vec::new();
            for c in (0..k).step_by(7) {
                let mut best = vec![f64::INFINITY; k];
                d.relax_class(c, &mut fwd, |u, w| best[u] = best[u].min(w));
                for u in 0..k {
                    assert_eq!(best[u], d.class_edge(c, u), "classes {c} → {u}");
                }
            }
        }
    }

    #[test]
    fn expanded_edges_have_the_same_length() {
        let d = build_disk(&DiskParams::fixed(1.0, 1.0, 1025, SeedRecord::new(6, 0))).unwrap();
        let k = d.n_classes();
        for (a, b) in [(0, k - 1), (3, k / 2), (k / 3, 2 * k / 3), (k - 2, 1)] {
            let chain = d.expand_edge(a, b);
            assert_eq!(chain[0], a);
            assert_eq!(*chain.last().unwrap(), b);
            let len: f64 = chain.windows(2).map(|w| d.class_edge(w[0], w[1])).sum();
            assert!((len - d.class_edge(a, b)).abs() < 1e-9, "{len} vs {}", d.class_edge(a, b));
        }
    }
}
