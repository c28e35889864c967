//! Label field `Z⁰` on the forest coded by `X`, plus the boundary bridge.
//!
//! `Z⁰` is the centered Gaussian process with
//! `Cov(Z⁰_s, Z⁰_t) = min_{u ∈ [s,t]} (X_u - inf_{v ≤ u} X_v)`, i.e. Brownian
//! motion indexed by the forest. `Z = Z⁰ + b∘T⁻¹` where `b` is `√3` times a
//! Brownian bridge of duration `ℓ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::encoding::{ForestCode, HittingTimes, RmqIndex};
use crate::error::ensure;
use crate::rng::{SeedRecord, StreamRng};
use crate::sampler::{Discretization, PathSample};
use crate::Result;

/// Largest grid for the dense Cholesky sampler.
pub const DEFAULT_CHOLESKY_CAP: usize = 2048;
/// Diagonal jitter added before factorizing the (rank-deficient) covariance.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Head of the discrete Brownian snake driven by a walk-mode contour.
///
/// An up-step pushes the current label and moves it by a centered Gaussian of
/// variance equal to the step; a down-step pops back to the stored label. At
/// the running infimum the stack is empty and the label is 0.
pub fn sample_labels_snake(code: &ForestCode, seed: SeedRecord) -> Result<Vec<f64>> {
    ensure!(
        code.path().mode() == Discretization::Walk,
        InvalidStructure,
        "snake sampler needs a walk-mode contour; use the Cholesky sampler"
    );
    let mut z0 = Vec::with_capacity(code.len());
    snake_walk(code.values(), code.path().step(), &mut seed.rng(), &mut z0);
    Ok(z0)
}

/// Snake head on a raw `±step` walk, written into `out` (cleared first).
pub fn snake_walk(x: &[f64], step: f64, rng: &mut StreamRng, out: &mut Vec<f64>) {
    let sd = step.sqrt();
    out.clear();
    let mut stack: Vec<f64> = Vec::new();
    let mut label = 0.0f64;
    out.push(label);
    for w in x.windows(2) {
        if w[1] > w[0] {
            stack.push(label);
            label += sd * rng.sample::<f64, _>(StandardNormal);
        } else {
            label = stack.pop().unwrap_or(0.0);
        }
        out.push(label);
    }
}

/// Exact Gaussian sampler for `Z⁰` through a dense Cholesky factor.
///
/// The covariance is assembled on one representative per `d_X`-zero class of
/// positive height; zero-height classes are deterministic zeros. Sampling at
/// class level makes `Z⁰` exactly constant on classes.
#[derive(Clone, Debug)]
pub struct CholeskyLabelSampler {
    class_of: Vec<u32>,
    active: Vec<usize>,
    slot_of_class: Vec<Option<usize>>,
    factor: DMatrix<f64>,
}

impl CholeskyLabelSampler {
    pub fn new(code: &ForestCode, cap: usize) -> Result<Self> {
        let n = code.len();
        ensure!(n <= cap, ResourceLimit, "Cholesky sampler capped at n = {cap} (got {n})");
        let classes = code.classes();
        let heights: Vec<f64> = (0..n).map(|i| code.height(i)).collect();
        let mut slot_of_class = vec![None; classes.len()];
        let mut active = Vec::new();
        for c in 0..classes.len() {
            let rep = classes.members(c)[0] as usize;
            if heights[rep] > 0.0 {
                slot_of_class[c] = Some(active.len());
                active.push(rep);
            }
        }
        let height_rmq = RmqIndex::new(heights)?;
        let k = active.len();
        let mut cov = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = height_rmq.min(active[a], active[b]);
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
            cov[(a, a)] += CHOLESKY_JITTER;
        }
        let factor = if k == 0 {
            cov
        } else {
            nalgebra::Cholesky::new(cov)
                .ok_or_else(|| crate::Error::NumericalFailure("label covariance not positive definite after jitter".into()))?
                .l()
        };
        Ok(Self { class_of: classes.labels().to_vec(), active, slot_of_class, factor })
    }

    pub fn sample(&self, seed: SeedRecord) -> Vec<f64> {
        let mut rng = seed.rng();
        let k = self.active.len();
        let g = DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal));
        let class_values = &self.factor * g;
        self.class_of
            .iter()
            .map(|&c| self.slot_of_class[c as usize].map_or(0.0, |s| class_values[s]))
            .collect()
    }
}

pub fn sample_labels_cholesky(code: &ForestCode, cap: usize, seed: SeedRecord) -> Result<Vec<f64>> {
    Ok(CholeskyLabelSampler::new(code, cap)?.sample(seed))
}

/// The exact covariance matrix of `Z⁰` on all grid indices (oracle use).
pub fn label_covariance(code: &ForestCode) -> DMatrix<f64> {
    let n = code.len();
    let heights: Vec<f64> = (0..n).map(|i| code.height(i)).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = (i.min(j), i.max(j));
        heights[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min)
    })
}

/// `Z⁰`, the boundary bridge and `Z = Z⁰ + b∘T⁻¹` with a circular minimum index.
#[derive(Clone, Debug)]
pub struct LabelField {
    z0: Vec<f64>,
    bridge: PathSample,
    z: Vec<f64>,
    rmq_z: RmqIndex,
}

impl LabelField {
    /// Assembles `Z` from `Z⁰` and a bridge sampled on the r-grid of `hits`.
    pub fn assemble(hits: &HittingTimes, z0: Vec<f64>, bridge: PathSample) -> Result<Self> {
        ensure!(
            bridge.len() == hits.levels(),
            InvalidParameter,
            "bridge has {} points but the r-grid has {}",
            bridge.len(),
            hits.levels()
        );
        ensure!(
            (bridge.duration() - hits.ell()).abs() <= 1e-9 * hits.ell(),
            InvalidParameter,
            "bridge duration {} differs from ℓ = {}",
            bridge.duration(),
            hits.ell()
        );
        let b = bridge.values();
        let z: Vec<f64> = z0.iter().enumerate().map(|(i, &v)| v + b[hits.inverse_level(i)]).collect();
        let mut doubled = z.clone();
        doubled.extend_from_slice(&z);
        let rmq_z = RmqIndex::new(doubled)?;
        Ok(Self { z0, bridge, z, rmq_z })
    }

    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn bridge(&self) -> &PathSample {
        &self.bridge
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Minimum of `Z` on the counterclockwise (increasing-index, wrapping) arc from `s` to `t`.
    #[inline]
    pub fn underline(&self, s: usize, t: usize) -> f64 {
        if s <= t {
            self.rmq_z.min(s, t)
        } else {
            self.rmq_z.min(s, t + self.z.len())
        }
    }

    /// Rounds `Z⁰` and the bridge to multiples of `step`, making every later
    /// sum of labels exact in floating point.
    pub fn quantized(&self, hits: &HittingTimes, step: f64) -> Result<Self> {
        let q = |v: f64| (v / step).round() * step;
        let z0 = self.z0.iter().map(|&v| q(v)).collect();
        let b = self.bridge.values().iter().map(|&v| q(v)).collect();
        let bridge = PathSample::new(b, self.bridge.dt(), self.bridge.kind(), self.bridge.mode(), self.bridge.seed())?;
        Self::assemble(hits, z0, bridge)
    }
}

pub fn assemble_z(hits: &HittingTimes, z0: Vec<f64>, bridge: PathSample) -> Result<LabelField> {
    LabelField::assemble(hits, z0, bridge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_bridge, sample_first_passage_bridge, sample_first_passage_walk, PathKind};

    fn walk_code(seed: u64, n: usize) -> ForestCode {
        ForestCode::new(sample_first_passage_walk(1.0, 1.0, n, SeedRecord::new(seed, 0)).unwrap()).unwrap()
    }

    fn walk_path(v: &[f64]) -> ForestCode {
        ForestCode::new(PathSample::new(v.to_vec(), 1.0, PathKind::Bm, Discretization::Walk, SeedRecord::new(0, 0)).unwrap())
            .unwrap()
    }

    #[test]
    fn snake_labels_constant_on_classes() {
        let code = walk_code(1, 4097);
        let z0 = sample_labels_snake(&code, SeedRecord::new(2, 0)).unwrap();
        assert_eq!(z0[0], 0.0);
        let cl = code.classes();
        for c in 0..cl.len() {
            let m = cl.members(c);
            assert!(m.iter().all(|&i| z0[i as usize] == z0[m[0] as usize]));
        }
        for i in 0..code.len() {
            if code.height(i) == 0.0 {
                assert_eq!(z0[i], 0.0);
            }
        }
    }

    #[test]
    fn snake_rejects_gaussian_contour() {
        let code = ForestCode::new(sample_first_passage_bridge(1.0, 1.0, 65, SeedRecord::new(1, 0)).unwrap()).unwrap();
        assert!(matches!(sample_labels_snake(&code, SeedRecord::new(1, 1)), Err(crate::Error::InvalidStructure(_))));
    }

    #[test]
    fn snake_peak_variance_equals_height() {
        // single up-down excursion of height 4 steps; unit step ⇒ variance 4 at the peak
        let code = walk_path(&[0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
        let reps = 40_000;
        let mut acc = 0.0;
        for r in 0..reps {
            let z0 = sample_labels_snake(&code, SeedRecord::new(5, r)).unwrap();
            acc += z0[4] * z0[4];
            assert_eq!(z0[3], z0[5]);
            assert_eq!(z0[0], z0[8]);
        }
        let var = acc / reps as f64;
        assert!((var - 4.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn cholesky_degenerate_cases() {
        let code = walk_path(&[3.0, 2.0, 1.0, 0.0]);
        let z0 = sample_labels_cholesky(&code, DEFAULT_CHOLESKY_CAP, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(z0, vec![0.0; 4]);
        let code = ForestCode::new(sample_first_passage_bridge(1.0, 1.0, 129, SeedRecord::new(2, 0)).unwrap()).unwrap();
        for s in 0..5 {
            let z0 = sample_labels_cholesky(&code, DEFAULT_CHOLESKY_CAP, SeedRecord::new(3, s)).unwrap();
            assert_eq!(z0[0], 0.0);
        }
    }

    #[test]
    fn cholesky_respects_cap() {
        let code = walk_code(1, 4097);
        assert!(matches!(
            sample_labels_cholesky(&code, DEFAULT_CHOLESKY_CAP, SeedRecord::new(1, 0)),
            Err(crate::Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn cholesky_constant_on_classes() {
        let code = walk_code(4, 1025);
        let z0 = sample_labels_cholesky(&code, DEFAULT_CHOLESKY_CAP, SeedRecord::new(9, 0)).unwrap();
        let cl = code.classes();
        for c in 0..cl.len() {
            let m = cl.members(c);
            let vals: Vec<f64> = m.iter().map(|&i| z0[i as usize]).collect();
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-9);
        }
    }

    #[test]
    fn cholesky_covariance_matches_formula() {
        let code = ForestCode::new(sample_first_passage_bridge(1.0, 1.0, 256, SeedRecord::new(12, 0)).unwrap()).unwrap();
        let exact = label_covariance(&code);
        let sampler = CholeskyLabelSampler::new(&code, DEFAULT_CHOLESKY_CAP).unwrap();
        let n = code.len();
        let reps = 10_000;
        let mut acc = DMatrix::<f64>::zeros(n, n);
        for r in 0..reps {
            let z = DVector::from_vec(sampler.sample(SeedRecord::new(13, r)));
            acc.ger(1.0, &z, &z, 1.0);
        }
        acc /= reps as f64;
        let max = exact.max();
        let worst = (acc - &exact).abs().max();
        assert!(worst <= 0.05 * max, "worst deviation {worst} vs max entry {max}");
    }

    #[test]
    fn assemble_z_pointwise() {
        let code = walk_code(6, 2049);
        let hits = code.hitting_times(code.default_levels()).unwrap();
        let z0 = sample_labels_snake(&code, SeedRecord::new(1, 0)).unwrap();
        let m = hits.levels();
        let bridge = sample_bridge(m, 1.0 / (m - 1) as f64, 3f64.sqrt(), SeedRecord::new(1, 1)).unwrap();

        let zero_bridge = PathSample::new(vec![0.0; m], bridge.dt(), PathKind::Bridge, Discretization::Gaussian, SeedRecord::new(0, 0)).unwrap();
        let f = LabelField::assemble(&hits, z0.clone(), zero_bridge).unwrap();
        assert_eq!(f.z(), &z0[..]);

        let f = LabelField::assemble(&hits, vec![0.0; code.len()], bridge.clone()).unwrap();
        for &(s, e) in code.excursions() {
            for i in s..=e {
                assert_eq!(f.z()[i], f.z()[s]);
            }
        }

        let f = LabelField::assemble(&hits, z0.clone(), bridge.clone()).unwrap();
        for k in 0..m {
            let t = hits.time(k);
            assert_eq!(f.z()[t] - f.z0()[t], bridge.values()[k]);
        }
        assert!(LabelField::assemble(&hits, z0, sample_bridge(m + 1, 1.0 / m as f64, 1.0, SeedRecord::new(1, 2)).unwrap()).is_err());
    }

    #[test]
    fn circular_minimum() {
        let code = walk_path(&[1.0, 0.0]);
        let hits = code.hitting_times(2).unwrap();
        let bridge = PathSample::new(vec![0.0, 0.0], 1.0, PathKind::Bridge, Discretization::Gaussian, SeedRecord::new(0, 0)).unwrap();
        let f = LabelField::assemble(&hits, vec![3.0, 5.0], bridge).unwrap();
        assert_eq!(f.underline(0, 1), 3.0);
        assert_eq!(f.underline(1, 0), 3.0);
        assert_eq!(f.underline(1, 1), 5.0);
    }
}
