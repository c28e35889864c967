//! Small statistical toolkit: summary moments, two-sample tests and the
//! Poisson tail bound.

use rand::seq::SliceRandom;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::ensure;
use crate::rng::SeedRecord;
use crate::Result;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Linear-interpolated empirical quantile, `q ∈ [0, 1]`.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Kolmogorov distribution tail `P[K > λ]`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    ensure!(!a.is_empty() && !b.is_empty(), InvalidParameter, "KS test needs two nonempty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult { statistic: d, p_value: kolmogorov_tail(lambda) })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    ensure!(!x.is_empty(), InvalidParameter, "KS test needs a nonempty sample");
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok(TestResult { statistic: d, p_value: kolmogorov_tail(lambda) })
}

/// Anderson–Darling normality test with estimated mean and variance
/// (`A*²` small-sample correction, D'Agostino–Stephens p-value).
pub fn anderson_darling_normal(x: &[f64]) -> Result<TestResult> {
    ensure!(x.len() >= 8, InvalidParameter, "Anderson–Darling needs at least 8 points");
    let n = x.len();
    let (m, sd) = (mean(x), variance(x).sqrt());
    ensure!(sd > 0.0, InvalidParameter, "constant sample");
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut s: Vec<f64> = x.iter().map(|v| (v - m) / sd).collect();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let fi = std.cdf(s[i]).clamp(1e-300, 1.0 - 1e-16);
        let fj = std.cdf(s[n - 1 - i]).clamp(1e-300, 1.0 - 1e-16);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (fi.ln() + (1.0 - fj).ln());
    }
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(TestResult { statistic: a, p_value: p.clamp(0.0, 1.0) })
}

fn mean_abs_between(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += (x - y).abs();
        }
    }
    s / (a.len() * b.len()) as f64
}

fn energy(a: &[f64], b: &[f64]) -> f64 {
    2.0 * mean_abs_between(a, b) - mean_abs_between(a, a) - mean_abs_between(b, b)
}

/// Energy-distance two-sample test, p-value from `permutations` relabelings.
pub fn energy_test(a: &[f64], b: &[f64], permutations: usize, seed: SeedRecord) -> Result<TestResult> {
    ensure!(a.len() >= 2 && b.len() >= 2, InvalidParameter, "energy test needs two samples of size ≥ 2");
    let observed = energy(a, b);
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut rng = seed.rng();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        pooled.shuffle(&mut rng);
        if energy(&pooled[..a.len()], &pooled[a.len()..]) >= observed {
            exceed += 1;
        }
    }
    Ok(TestResult { statistic: observed, p_value: (exceed + 1) as f64 / (permutations + 1) as f64 })
}

/// Chernoff bound `P[X ≥ x] ≤ e^{-λ} (eλ)^x / x^x` for `X ~ Poisson(λ)`, `x > λ`.
pub fn poisson_tail_bound(lambda: f64, x: f64) -> Result<f64> {
    ensure!(lambda > 0.0 && lambda.is_finite(), InvalidParameter, "λ must be positive");
    ensure!(x > lambda, InvalidParameter, "bound needs x > λ (got x = {x}, λ = {lambda})");
    Ok((-lambda + x * (std::f64::consts::E * lambda).ln() - x * x.ln()).exp())
}
