//! Forest structure of a contour process `X`.
//!
//! All arithmetic is on grid indices; `d_X(s,t) = X_s + X_t - 2 min X[s..=t]`
//! is evaluated through a sparse-table range-minimum index. Ties in running
//! minima resolve to the leftmost argmin.

mod classes;
mod rmq;

pub use classes::Partition;
pub use rmq::RmqIndex;

use classes::DisjointSets;

use crate::error::ensure;
use crate::sampler::PathSample;
use crate::Result;

/// `X` together with its range-minimum index, running infimum, zero classes of
/// `d_X` and the excursions away from the running infimum.
#[derive(Clone, Debug)]
pub struct ForestCode {
    x: PathSample,
    rmq: RmqIndex,
    running_inf: Vec<f64>,
    classes: Partition,
    excursions: Vec<(usize, usize)>,
}

impl ForestCode {
    pub fn new(x: PathSample) -> Result<Self> {
        let rmq = RmqIndex::new(x.values().to_vec())?;
        let running_inf = running_infimum(x.values());
        let classes = zero_classes(x.values());
        let excursions = infimum_excursions(x.values(), &running_inf);
        Ok(Self { x, rmq, running_inf, classes, excursions })
    }

    pub fn path(&self) -> &PathSample {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        self.x.values()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn rmq(&self) -> &RmqIndex {
        &self.rmq
    }

    pub fn running_inf(&self) -> &[f64] {
        &self.running_inf
    }

    /// Height above the running infimum, `X_u - inf_{v ≤ u} X_v`.
    pub fn height(&self, i: usize) -> f64 {
        self.x.values()[i] - self.running_inf[i]
    }

    /// Partition of grid indices into `{d_X = 0}` classes.
    pub fn classes(&self) -> &Partition {
        &self.classes
    }

    /// `(start, end)` index pairs of excursions above the running infimum;
    /// both endpoints sit at the infimum level and the interior lies strictly above.
    pub fn excursions(&self) -> &[(usize, usize)] {
        &self.excursions
    }

    pub fn d_x(&self, s: usize, t: usize) -> Result<f64> {
        let n = self.len();
        ensure!(s < n && t < n, InvalidParameter, "index out of range ({s}, {t}) for n = {n}");
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let v = self.x.values();
        Ok((v[s] + v[t] - 2.0 * self.rmq.min(lo, hi)).max(0.0))
    }

    /// Default r-grid size: spacing at most one walk step `√dt`.
    pub fn default_levels(&self) -> usize {
        (self.x.first() / self.x.step() - 1e-9).ceil().max(1.0) as usize + 1
    }

    /// Hitting times `T_r = min{i : X_i ≤ ℓ - r}` on an `m`-point uniform r-grid.
    ///
    /// Levels between grid values are resolved to the first grid crossing.
    pub fn hitting_times(&self, m: usize) -> Result<HittingTimes> {
        HittingTimes::new(self.x.values(), m)
    }
}

/// `T_r` on a uniform r-grid over `[0, ℓ]` and its inverse `T⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTimes {
    ell: f64,
    times: Vec<usize>,
    inverse: Vec<u32>,
}

impl HittingTimes {
    fn new(x: &[f64], m: usize) -> Result<Self> {
        ensure!(m >= 2, InvalidParameter, "r-grid needs at least two points");
        let n = x.len();
        let ell = x[0];
        let last = x[n - 1];
        ensure!(ell > 0.0, InvalidStructure, "contour must start at ℓ > 0");
        ensure!(last == 0.0, InvalidStructure, "contour must end at 0");
        let spacing = ell / (m - 1) as f64;
        let eps = 1e-9 * spacing;
        let mut times = Vec::with_capacity(m);
        let mut i = 0usize;
        for k in 0..m {
            let level = ell - k as f64 * spacing + eps;
            while x[i] > level {
                i += 1;
                ensure!(i < n, InvalidStructure, "contour never reaches level {level}");
            }
            times.push(i);
        }
        ensure!(
            times[m - 1] == n - 1,
            InvalidStructure,
            "contour reaches 0 before its last index ({} < {})",
            times[m - 1],
            n - 1
        );
        let mut inverse = Vec::with_capacity(n);
        let mut k = 0usize;
        for t in 0..n {
            while k + 1 < m && times[k + 1] <= t {
                k += 1;
            }
            inverse.push(k as u32);
        }
        Ok(Self { ell, times, inverse })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn spacing(&self) -> f64 {
        self.ell / (self.times.len() - 1) as f64
    }

    pub fn r(&self, k: usize) -> f64 {
        if k + 1 == self.times.len() {
            self.ell
        } else {
            k as f64 * self.spacing()
        }
    }

    /// Grid index `T_{r_k}`.
    pub fn time(&self, k: usize) -> usize {
        self.times[k]
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    /// r-grid level `k` with `r_k = T⁻¹(i) = max{r_k : T_{r_k} ≤ i}`.
    #[inline]
    pub fn inverse_level(&self, i: usize) -> usize {
        self.inverse[i] as usize
    }

    pub fn inverse_r(&self, i: usize) -> f64 {
        self.r(self.inverse_level(i))
    }
}

pub fn running_infimum(x: &[f64]) -> Vec<f64> {
    let mut m = f64::INFINITY;
    x.iter()
        .map(|&v| {
            m = m.min(v);
            m
        })
        .collect()
}

/// `{d_X = 0}` classes: `i ~ j` iff `X_i = X_j = min X[i..=j]`.
///
/// One left-to-right pass with a stack of strictly increasing values; an
/// index joins the class of the stack top when their values tie after
/// popping larger entries.
pub fn zero_classes(x: &[f64]) -> Partition {
    let n = x.len();
    let mut sets = DisjointSets::new(n);
    let mut stack: Vec<usize> = Vec::new();
    for j in 0..n {
        while let Some(&top) = stack.last() {
            if x[top] > x[j] {
                stack.pop();
            } else {
                break;
            }
        }
        match stack.last() {
            Some(&top) if x[top] == x[j] => {
                sets.union(top, j);
                *stack.last_mut().unwrap() = j;
            }
            _ => stack.push(j),
        }
    }
    Partition::from_sets(sets, n)
}

fn infimum_excursions(x: &[f64], running_inf: &[f64]) -> Vec<(usize, usize)> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i < n {
        if x[i] > running_inf[i] {
            let start = i - 1;
            while i < n && x[i] > running_inf[i] {
                i += 1;
            }
            out.push((start, i.min(n - 1)));
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRecord;
    use crate::sampler::{sample_bm, sample_first_passage_walk, Discretization, PathKind};

    fn path(v: &[f64]) -> PathSample {
        PathSample::new(v.to_vec(), 1.0, PathKind::Bm, Discretization::Walk, SeedRecord::new(0, 0)).unwrap()
    }

    fn code(v: &[f64]) -> ForestCode {
        ForestCode::new(path(v)).unwrap()
    }

    fn brute_d_x(x: &[f64], s: usize, t: usize) -> f64 {
        let (lo, hi) = (s.min(t), s.max(t));
        let m = x[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
        x[s] + x[t] - 2.0 * m
    }

    #[test]
    fn d_x_hand_values() {
        let c = code(&[2.0, 1.0, 0.0]);
        assert_eq!(c.d_x(0, 2).unwrap(), 2.0);
        assert_eq!(c.d_x(1, 1).unwrap(), 0.0);
        let c = code(&[0.0, 2.0, 1.0, 3.0]);
        assert_eq!(c.d_x(1, 3).unwrap(), 3.0);
        assert!(matches!(c.d_x(0, 4), Err(crate::Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_classes_hand_values() {
        let c = code(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.classes().len(), 4);
        let c = code(&[1.0, 0.0, 1.0, 0.0]);
        assert!(c.classes().same(1, 3));
        assert!(!c.classes().same(0, 2));
        assert_eq!(c.classes().len(), 3);
    }

    #[test]
    fn zero_classes_match_all_pairs_oracle() {
        for s in 0..5 {
            let p = sample_bm(256, 1.0, 0.0, Discretization::Walk, SeedRecord::new(s, 2)).unwrap();
            let x = p.values().to_vec();
            let c = ForestCode::new(p).unwrap();
            for i in 0..x.len() {
                for j in i..x.len() {
                    let zero = brute_d_x(&x, i, j) == 0.0;
                    assert_eq!(c.classes().same(i, j), zero, "({i}, {j})");
                    assert_eq!(c.d_x(i, j).unwrap() == 0.0, zero);
                }
            }
        }
    }

    #[test]
    fn d_x_is_a_pseudometric() {
        let p = sample_bm(64, 1.0, 0.0, Discretization::Gaussian, SeedRecord::new(4, 2)).unwrap();
        let c = ForestCode::new(p).unwrap();
        let n = c.len();
        for i in 0..n {
            assert_eq!(c.d_x(i, i).unwrap(), 0.0);
            for j in 0..n {
                let dij = c.d_x(i, j).unwrap();
                assert_eq!(dij, c.d_x(j, i).unwrap());
                for k in 0..n {
                    assert!(dij <= c.d_x(i, k).unwrap() + c.d_x(k, j).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn hitting_times_monotone_contour() {
        let c = code(&[2.0, 1.0, 0.0]);
        let h = c.hitting_times(3).unwrap();
        assert_eq!(h.times(), &[0, 1, 2]);
        for k in 0..3 {
            assert_eq!(h.inverse_level(h.time(k)), k);
        }
    }

    #[test]
    fn hitting_times_reject_bad_shapes() {
        let c = code(&[2.0, 0.0, 1.0, 0.0]);
        assert!(matches!(c.hitting_times(3), Err(crate::Error::InvalidStructure(_))));
        let c = code(&[2.0, 1.0, 1.0]);
        assert!(matches!(c.hitting_times(3), Err(crate::Error::InvalidStructure(_))));
    }

    #[test]
    fn hitting_times_match_forward_scan() {
        let p = sample_first_passage_walk(1.0, 1.0, 4097, SeedRecord::new(8, 0)).unwrap();
        let c = ForestCode::new(p).unwrap();
        let m = c.default_levels();
        let h = c.hitting_times(m).unwrap();
        let x = c.values();
        let ell = x[0];
        for k in 0..m {
            let level = ell * (1.0 - k as f64 / (m - 1) as f64);
            let t = x.iter().position(|&v| v <= level + 1e-9).unwrap();
            assert_eq!(h.time(k), t, "level {k}");
            assert!(h.inverse_level(h.time(k)) == k);
        }
        assert!(h.times().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn excursion_hand_values() {
        assert!(code(&[3.0, 2.0, 1.0, 0.0]).excursions().is_empty());
        assert_eq!(code(&[2.0, 1.0, 2.0, 1.0, 0.0]).excursions(), &[(1, 3)]);
    }

    #[test]
    fn excursions_and_first_passage_set_cover_the_grid() {
        let p = sample_first_passage_walk(1.0, 1.0, 2049, SeedRecord::new(3, 0)).unwrap();
        let c = ForestCode::new(p).unwrap();
        let n = c.len();
        let mut seen = vec![0u8; n];
        for &(s, e) in c.excursions() {
            assert_eq!(c.values()[s], c.running_inf()[s]);
            for i in s + 1..e {
                assert!(c.values()[i] > c.running_inf()[i]);
                seen[i] += 1;
            }
            assert!(c.classes().same(s, e));
        }
        for i in 0..n {
            let on_infimum = c.values()[i] == c.running_inf()[i];
            assert_eq!(seen[i] == 1, !on_infimum, "index {i}");
            assert!(seen[i] <= 1);
        }
    }
}
