//! Running-infimum structure of Brownian motion without storing the path.
//!
//! Excursions above the running infimum that climb past `skip_height` are
//! completed in one draw: the time for Brownian motion at height `y` above a
//! level to return to it is `y²/G²` with `G` standard normal. Nothing in such
//! an excursion can attain a new infimum, so the ladder (infimum) process is
//! sampled exactly while the grid work stays proportional to the time spent
//! near the infimum.

use rand::Rng;
use rand_distr::StandardNormal;

use super::PathSample;
use crate::error::ensure;
use crate::rng::{SeedRecord, StreamRng};
use crate::Result;

/// One excursion away from the running infimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderExcursion {
    /// Minus the running infimum while the excursion lasts (`r` in `T_r`).
    pub level: f64,
    pub start: f64,
    pub end: f64,
}

impl LadderExcursion {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Ladder structure of a Brownian motion from 0 run until its infimum passes `-depth`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub depth: f64,
    pub dt: f64,
    pub excursions: Vec<LadderExcursion>,
    /// First grid time with value below `-depth`.
    pub end_time: f64,
}

impl Ladder {
    /// Times at which a new infimum is attained, starting with 0.
    pub fn first_passage_times(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(0.0).chain(self.excursions.iter().map(|e| e.end))
    }
}

pub fn sample_ladder(
    depth: f64,
    dt: f64,
    skip_height: f64,
    max_steps: usize,
    seed: SeedRecord,
) -> Result<Ladder> {
    ensure!(depth > 0.0 && depth.is_finite(), InvalidParameter, "depth must be positive");
    ensure!(dt > 0.0 && dt.is_finite(), InvalidParameter, "dt must be positive");
    ensure!(skip_height > 0.0, InvalidParameter, "skip height must be positive");
    let mut rng = seed.rng();
    let sd = dt.sqrt();
    let (mut x, mut inf, mut t, mut start) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut excursions = Vec::new();
    let mut steps = 0usize;
    loop {
        ensure!(steps < max_steps, ResourceLimit, "ladder exceeded {max_steps} steps");
        steps += 1;
        x += sd * rng.sample::<f64, _>(StandardNormal);
        t += dt;
        if x < inf {
            excursions.push(LadderExcursion { level: -inf, start, end: t });
            inf = x;
            start = t;
            if inf <= -depth {
                return Ok(Ladder { depth, dt, excursions, end_time: t });
            }
        } else if x - inf >= skip_height {
            let g: f64 = rng.sample(StandardNormal);
            let y = x - inf;
            t += y * y / (g * g);
            excursions.push(LadderExcursion { level: -inf, start, end: t });
            x = inf;
            start = t;
        }
    }
}

/// Exact draw of the minimum of a Brownian bridge from `a` to `b` over time `dt`.
pub fn bridge_minimum(a: f64, b: f64, dt: f64, rng: &mut StreamRng) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let d = b - a;
    0.5 * (a + b - (d * d - 2.0 * dt * u.ln()).sqrt())
}

/// Infimum of the continuous Brownian path interpolating a Gaussian-mode grid path.
pub fn path_infimum(path: &PathSample, rng: &mut StreamRng) -> f64 {
    let dt = path.dt();
    path.values()
        .windows(2)
        .map(|w| bridge_minimum(w[0], w[1], dt, rng))
        .fold(f64::INFINITY, f64::min)
}
