use crate::error::ensure;
use crate::Result;

/// Sparse-table range-minimum index over an owned array.
///
/// `query(i, j)` returns the minimum of `values[i..=j]` together with its
/// leftmost argmin in O(1) after O(n log n) preprocessing.
#[derive(Clone, Debug)]
pub struct RmqIndex {
    values: Vec<f64>,
    // levels[k][i] = leftmost argmin of values[i .. i + 2^k]
    levels: Vec<Vec<u32>>,
}

impl RmqIndex {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure!(!values.is_empty(), InvalidParameter, "range-minimum index needs a nonempty array");
        ensure!(values.len() < u32::MAX as usize, ResourceLimit, "array too long for u32 indices");
        let n = values.len();
        let mut levels: Vec<Vec<u32>> = vec![(0..n as u32).collect()];
        let mut width = 1usize;
        while 2 * width <= n {
            let prev = &levels[levels.len() - 1];
            let next: Vec<u32> = (0..=n - 2 * width)
                .map(|i| {
                    let (a, b) = (prev[i], prev[i + width]);
                    if values[b as usize] < values[a as usize] {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            levels.push(next);
            width *= 2;
        }
        Ok(Self { values, levels })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(min, leftmost argmin)` over the inclusive range `[i, j]`, `i <= j`.
    #[inline]
    pub fn query(&self, i: usize, j: usize) -> (f64, usize) {
        debug_assert!(i <= j && j < self.values.len());
        let k = (usize::BITS - 1 - (j - i + 1).leading_zeros()) as usize;
        let level = &self.levels[k];
        let a = level[i] as usize;
        let b = level[j + 1 - (1 << k)] as usize;
        let (va, vb) = (self.values[a], self.values[b]);
        if vb < va || (vb == va && b < a) {
            (vb, b)
        } else {
            (va, a)
        }
    }

    #[inline]
    pub fn min(&self, i: usize, j: usize) -> f64 {
        self.query(i, j).0
    }
}
