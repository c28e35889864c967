//! Brute-force references for the metric kernels.
//!
//! Everything here works on the uncontracted grid with direct scans, so it
//! shares no code with the range-minimum index, the class contraction or
//! Dijkstra.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::diskmetric::{build_disk, DiskInstance, DiskParams, FiniteGeodesicSpace};
use crate::encoding::RmqIndex;
use crate::gluing::{glue_disks, Orientation};
use crate::labels::{label_covariance, snake_walk};
use crate::rng::SeedRecord;
use crate::sampler::Discretization;
use crate::{Error, Result};

/// Label quantum for exact-arithmetic comparisons.
pub const LABEL_STEP: f64 = 1.0 / 64.0;

pub const ORACLES: &[&str] =
    &["quotient-floyd-warshall", "glued-floyd-warshall", "rmq-scan", "pseudometric", "d_z-violation", "snake-cholesky"];

/// Label draws per instance in the snake/covariance comparison.
pub const SNAKE_DRAWS: usize = 20_000;

/// Small walk-mode disk whose contour and labels are dyadic, so every path
/// length is computed exactly.
pub fn exact_disk(n: usize, seed: SeedRecord) -> Result<DiskInstance> {
    let area = 0.75 * (n - 1) as f64 / 48.0;
    let params = DiskParams::fixed(1.0, area, n, seed).with_mode(Discretization::Walk);
    build_disk(&params)?.quantized(LABEL_STEP)
}

pub fn scan_min(v: &[f64], i: usize, j: usize) -> f64 {
    v[i..=j].iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn scan_d_x(x: &[f64], s: usize, t: usize) -> f64 {
    let (lo, hi) = (s.min(t), s.max(t));
    x[s] + x[t] - 2.0 * scan_min(x, lo, hi)
}

/// Minimum over the cyclic arc `s, s+1, …, t`.
pub fn scan_arc_min(z: &[f64], s: usize, t: usize) -> f64 {
    let n = z.len();
    let mut m = z[s];
    let mut j = s;
    while j != t {
        j = (j + 1) % n;
        m = m.min(z[j]);
    }
    m
}

pub fn scan_d_z(z: &[f64], s: usize, t: usize) -> f64 {
    z[s] + z[t] - 2.0 * scan_arc_min(z, s, t).max(scan_arc_min(z, t, s))
}

/// All-pairs shortest paths in place on a row-major `n × n` matrix.
pub fn floyd_warshall(w: &mut [f64], n: usize) {
    for k in 0..n {
        for i in 0..n {
            let ik = w[i * n + k];
            if ik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = ik + w[k * n + j];
                if via < w[i * n + j] {
                    w[i * n + j] = via;
                }
            }
        }
    }
}

/// Chain-infimum distance on the grid: `d_Z` edges between every pair plus
/// zero edges between points with `d_X = 0`.
pub fn grid_quotient(disk: &DiskInstance) -> Vec<f64> {
    let x = disk.code().values();
    let z = disk.z();
    let n = z.len();
    let mut w = vec![0.0; n * n];
    for s in 0..n {
        for t in 0..n {
            w[s * n + t] = if scan_d_x(x, s, t) == 0.0 { 0.0 } else { scan_d_z(z, s, t) };
        }
    }
    floyd_warshall(&mut w, n);
    w
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleOutcome {
    pub name: String,
    pub instances: usize,
    pub comparisons: usize,
    pub mismatches: usize,
    pub detail: String,
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.comparisons > 0
    }
}

struct Tally {
    comparisons: usize,
    mismatches: usize,
    first: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self { comparisons: 0, mismatches: 0, first: None }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.comparisons += 1;
        if !ok {
            self.mismatches += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, name: &str, instances: usize) -> OracleOutcome {
        let detail = self.first.unwrap_or_else(|| format!("{} comparisons agree", self.comparisons));
        OracleOutcome { name: name.to_string(), instances, comparisons: self.comparisons, mismatches: self.mismatches, detail }
    }
}

/// Runs one named oracle over `instances` random instances of `n` grid
/// points. `fault` perturbs the reference side so the harness can be seen to
/// fail.
pub fn run_oracle(name: &str, instances: usize, n: usize, seed: SeedRecord, fault: bool) -> Result<OracleOutcome> {
    if !(2..=64).contains(&n) {
        return Err(Error::InvalidParameter(format!("oracle grid size must be in 2..=64, got {n}")));
    }
    let bump = if fault { LABEL_STEP } else { 0.0 };
    let mut tally = Tally::new();
    let mut grid_hits = 0;
    for i in 0..instances {
        let s = seed.child(i as u64);
        match name {
            "quotient-floyd-warshall" => {
                let disk = Arc::new(exact_disk(n, s)?);
                let mut reference = grid_quotient(&disk);
                reference[1] += bump;
                let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
                for a in 0..n {
                    let d = space.distances_from(disk.class_of(a))?;
                    for b in 0..n {
                        let got = d[disk.class_of(b)];
                        let want = reference[a * n + b];
                        tally.expect(got == want, || format!("instance {i}: d({a},{b}) = {got}, reference {want}"));
                    }
                }
            }
            "glued-floyd-warshall" => glued_oracle(n, s, i, bump, &mut tally)?,
            "rmq-scan" => {
                let mut rng = s.rng();
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-4..4) as f64 * LABEL_STEP).collect();
                let rmq = RmqIndex::new(v.clone())?;
                for a in 0..n {
                    for b in a..n {
                        let want = scan_min(&v, a, b) + bump;
                        let got = rmq.min(a, b);
                        tally.expect(got == want, || format!("instance {i}: min[{a},{b}] = {got}, scan {want}"));
                    }
                }
            }
            "pseudometric" => {
                let disk = Arc::new(exact_disk(n, s)?);
                let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
                let k = disk.n_classes();
                let d0: Vec<Vec<f64>> = (0..k).map(|c| space.distances_from(c)).collect::<Result<_>>()?;
                let dx = |a: usize, b: usize| disk.code().d_x(a, b).unwrap_or(f64::NAN);
                let d0g = |a: usize, b: usize| d0[disk.class_of(a)][disk.class_of(b)];
                for (label, d) in [("d_X", &dx as &dyn Fn(usize, usize) -> f64), ("d⁰", &d0g)] {
                    pseudometric_checks(label, n, d, bump, i, &mut tally);
                }
            }
            "snake-cholesky" => {
                let disk = exact_disk(n, s)?;
                let code = disk.code();
                let mut exact = label_covariance(code);
                exact[(n / 2, n / 2)] += bump * 64.0;
                let scale = exact.max();
                let mut acc = DMatrix::<f64>::zeros(n, n);
                let mut rng = s.child(1).rng();
                let mut z = Vec::new();
                for _ in 0..SNAKE_DRAWS {
                    snake_walk(code.values(), code.path().step(), &mut rng, &mut z);
                    let v = DVector::from_column_slice(&z);
                    acc.ger(1.0, &v, &v, 1.0);
                }
                acc /= SNAKE_DRAWS as f64;
                for a in 0..n {
                    for b in 0..n {
                        let (got, want) = (acc[(a, b)], exact[(a, b)]);
                        tally.expect((got - want).abs() <= 0.05 * scale, || {
                            format!("instance {i}: Cov({a},{b}) snake {got:.4}, exact {want:.4}")
                        });
                    }
                }
            }
            "d_z-violation" => {
                let disk = exact_disk(n, s)?;
                let found = d_z_violation(&disk).is_some();
                tally.expect(found != fault, || format!("instance {i}: no triangle violation of d_Z"));
                if grid_d_z_violation(disk.z()) {
                    grid_hits += 1;
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!("unknown oracle {other:?}; valid: {}", ORACLES.join(", "))));
            }
        }
    }
    if name == "d_z-violation" {
        // one violation anywhere suffices
        let hits = tally.comparisons - tally.mismatches;
        return Ok(OracleOutcome {
            name: name.into(),
            instances,
            comparisons: tally.comparisons,
            mismatches: usize::from(hits == 0),
            detail: format!(
                "{hits} of {instances} instances violate the triangle inequality on zero classes \
                 ({grid_hits} on the bare grid)"
            ),
        });
    }
    Ok(tally.finish(name, instances))
}

fn pseudometric_checks(label: &str, n: usize, d: &dyn Fn(usize, usize) -> f64, bump: f64, inst: usize, tally: &mut Tally) {
    for a in 0..n {
        tally.expect(d(a, a) + bump == 0.0, || format!("instance {inst}: {label}({a},{a}) ≠ 0"));
        for b in 0..n {
            tally.expect(d(a, b) == d(b, a), || format!("instance {inst}: {label} asymmetric at ({a},{b})"));
            for c in 0..n {
                tally.expect(d(a, c) <= d(a, b) + d(b, c), || format!("instance {inst}: {label} triangle fails at ({a},{b},{c})"));
            }
        }
    }
}

/// A triple of grid points `(s, t, u)` whose zero classes violate the
/// triangle inequality for `d_Z` read on the forest, i.e. the minimum of
/// `d_Z` over representatives of each class.
///
/// On the bare grid `d_Z` is itself a pseudometric: the two arcs realizing
/// `d_Z(s,t)` and `d_Z(t,u)` together cover an arc from `s` to `u` whose
/// minimum is at least `min(m_st, m_tu) ≥ m_st + m_tu - Z_t`. The failure
/// appears only once points with `d_X = 0` are identified.
pub fn d_z_violation(disk: &DiskInstance) -> Option<(usize, usize, usize)> {
    let z = disk.z();
    let cl = disk.classes();
    let k = cl.len();
    let mut d = vec![f64::INFINITY; k * k];
    for s in 0..z.len() {
        for t in 0..z.len() {
            let e = &mut d[cl.class_of(s) * k + cl.class_of(t)];
            *e = e.min(scan_d_z(z, s, t));
        }
    }
    let rep = |c: usize| cl.members(c)[0] as usize;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                if d[a * k + c] > d[a * k + b] + d[b * k + c] {
                    return Some((rep(a), rep(b), rep(c)));
                }
            }
        }
    }
    None
}

/// Whether the literal grid `d_Z` violates the triangle inequality anywhere.
pub fn grid_d_z_violation(z: &[f64]) -> bool {
    let n = z.len();
    let d: Vec<f64> = (0..n * n).map(|k| scan_d_z(z, k / n, k % n)).collect();
    (0..n * n * n).any(|k| {
        let (s, t, u) = (k / (n * n), (k / n) % n, k % n);
        d[s * n + u] > d[s * n + t] + d[t * n + u]
    })
}

/// Two exact disks glued along their whole boundaries with reversed
/// orientation, against Floyd–Warshall on the disjoint union of both grids
/// with zero edges between `T_r` on one side and `T_{ℓ-r}` on the other.
fn glued_oracle(n: usize, seed: SeedRecord, inst: usize, bump: f64, tally: &mut Tally) -> Result<()> {
    let d1 = Arc::new(exact_disk(n, seed.child(0))?);
    let d2 = Arc::new(exact_disk(n, seed.child(1))?);
    let ell = d1.perimeter();
    let g = glue_disks(d1.clone(), d2.clone(), ([0.0, ell], [0.0, ell]), Orientation::Reversed)?;
    let disks = [&d1, &d2];
    let n1 = d1.len();
    let m = n1 + d2.len();
    let mut w = vec![f64::INFINITY; m * m];
    for (p, d) in disks.iter().enumerate() {
        let off = p * n1;
        let sub = grid_quotient(d);
        let k = d.len();
        for a in 0..k {
            for b in 0..k {
                w[(off + a) * m + off + b] = sub[a * k + b];
            }
        }
    }
    let b1 = d1.boundary();
    let b2 = d2.boundary();
    for p in b1 {
        let q = b2.iter().min_by(|x, y| (x.r - (ell - p.r)).abs().total_cmp(&(y.r - (ell - p.r)).abs())).unwrap();
        w[p.index * m + n1 + q.index] = 0.0;
        w[(n1 + q.index) * m + p.index] = 0.0;
    }
    for q in b2 {
        let p = b1.iter().min_by(|x, y| (x.r - (ell - q.r)).abs().total_cmp(&(y.r - (ell - q.r)).abs())).unwrap();
        w[p.index * m + n1 + q.index] = 0.0;
        w[(n1 + q.index) * m + p.index] = 0.0;
    }
    floyd_warshall(&mut w, m);
    w[1] += bump;
    let vertex = |a: usize| if a < n1 { g.space.vertex(0, d1.class_of(a)) } else { g.space.vertex(1, d2.class_of(a - n1)) };
    for a in 0..m {
        let d = g.space.distances_from(vertex(a))?;
        for b in 0..m {
            let (got, want) = (d[vertex(b)], w[a * m + b]);
            tally.expect(got == want, || format!("instance {inst}: glued d({a},{b}) = {got}, reference {want}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_disk_is_dyadic() {
        let d = exact_disk(49, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(d.len(), 49);
        for v in d.z().iter().chain(d.code().values()) {
            assert_eq!((v * 64.0).fract(), 0.0, "{v}");
        }
    }

    #[test]
    fn grid_d_z_is_a_pseudometric_but_class_d_z_is_not() {
        let mut found = false;
        for i in 0..20 {
            let d = exact_disk(33, SeedRecord::new(3, i)).unwrap();
            assert!(!grid_d_z_violation(d.z()));
            if let Some((s, t, u)) = d_z_violation(&d) {
                let dz = |a: usize, b: usize| -> f64 {
                    let z = d.z();
                    let mut m = f64::INFINITY;
                    for &x in d.classes().members(d.class_of(a)) {
                        for &y in d.classes().members(d.class_of(b)) {
                            m = m.min(scan_d_z(z, x as usize, y as usize));
                        }
                    }
                    m
                };
                assert!(dz(s, u) > dz(s, t) + dz(t, u));
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn floyd_warshall_on_a_path() {
        let inf = f64::INFINITY;
        let mut w = vec![0.0, 1.0, inf, 1.0, 0.0, 2.0, inf, 2.0, 0.0];
        floyd_warshall(&mut w, 3);
        assert_eq!(w[2], 3.0);
        assert_eq!(w[6], 3.0);
    }

    #[test]
    fn oracles_pass_and_faults_are_caught() {
        for name in ORACLES {
            let ok = run_oracle(name, 2, 25, SeedRecord::new(2, 0), false).unwrap();
            assert!(ok.passed(), "{name}: {}", ok.detail);
        }
        for name in ["quotient-floyd-warshall", "glued-floyd-warshall", "rmq-scan", "pseudometric", "snake-cholesky"] {
            let bad = run_oracle(name, 1, 25, SeedRecord::new(2, 0), true).unwrap();
            assert!(!bad.passed(), "{name} missed the injected fault");
        }
        assert!(run_oracle("nope", 1, 25, SeedRecord::new(2, 0), false).is_err());
    }
}
