//! The end-to-end acceptance criteria, each with its tolerance and time budget.

pub mod oracles;

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::diskmetric::DiskInstance;
use crate::gluing::GluedSpace;
use crate::rng::SeedRecord;
use crate::scaling::*;
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    /// `None` for criteria measured on an ensemble charged to an earlier one.
    pub budget: Option<Duration>,
}

const fn mins(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "oracle equivalence", budget: mins(1) },
    Criterion { id: 2, name: "pseudometric suite", budget: mins(1) },
    Criterion { id: 3, name: "excursion mean", budget: mins(1) },
    Criterion { id: 4, name: "excursion-count scaling", budget: mins(2) },
    Criterion { id: 5, name: "Poisson excursion law", budget: mins(2) },
    Criterion { id: 6, name: "label covariance", budget: mins(5) },
    Criterion { id: 7, name: "snake tail exponent", budget: mins(10) },
    Criterion { id: 8, name: "ball-volume exponent", budget: mins(15) },
    Criterion { id: 9, name: "boundary Hölder exponent", budget: None },
    Criterion { id: 10, name: "arc-neighborhood exponents", budget: None },
    Criterion { id: 11, name: "flat counterexample", budget: mins(1) },
    Criterion { id: 12, name: "glued locality", budget: mins(20) },
    Criterion { id: 13, name: "crossing-count scaling", budget: None },
    Criterion { id: 14, name: "grid self-consistency", budget: mins(10) },
];

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
    /// Full reports behind the verdict.
    pub reports: Vec<Report>,
}

impl Outcome {
    pub fn over_budget(&self) -> bool {
        self.budget.is_some_and(|b| self.elapsed > b)
    }

    pub fn line(&self) -> String {
        let budget = self.budget.map_or("shared".to_string(), |b| format!("{}s", b.as_secs()));
        format!(
            "{} [{:>2}] {:<28} {:>8.1}s / {:<6} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            budget,
            self.detail
        )
    }
}

/// Runs criteria, sharing the disk and glued ensembles between those that
/// are measured on the same replicas.
#[derive(Default)]
pub struct Suite {
    disks: OnceLock<Vec<Arc<DiskInstance>>>,
    glued: OnceLock<Vec<Arc<GluedSpace>>>,
    glued_report: OnceLock<Report>,
}

fn check_detail(report: &Report) -> String {
    report
        .checks
        .iter()
        .map(|c| format!("{}={:.4}{}", c.name, c.value, if c.passed { "" } else { "(!)" }))
        .collect::<Vec<_>>()
        .join("; ")
}

fn only(report: Report, names: &[&str]) -> (bool, String, Vec<Report>) {
    let picked: Vec<_> = names.iter().map(|n| report.check_named(n)).collect();
    let passed = picked.iter().all(|c| c.is_some_and(|c| c.passed));
    let detail = picked
        .iter()
        .zip(names)
        .map(|(c, n)| match c {
            Some(c) => format!("{}={:.4}{}", c.name, c.value, if c.passed { "" } else { "(!)" }),
            None => format!("{n}=missing(!)"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    (passed, detail, vec![report])
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    fn disks(&self) -> Result<&[Arc<DiskInstance>]> {
        if let Some(d) = self.disks.get() {
            return Ok(d);
        }
        let d = build_ensemble(&EnsembleConfig::default())?;
        Ok(self.disks.get_or_init(|| d))
    }

    fn glued(&self) -> Result<&Report> {
        if let Some(r) = self.glued_report.get() {
            return Ok(r);
        }
        let spaces = match self.glued.get() {
            Some(s) => s,
            None => {
                let s = build_glued_ensemble(&GluedEnsembleConfig::default())?;
                self.glued.get_or_init(|| s)
            }
        };
        let r = glued_locality_report(spaces, &GluedLocalityConfig::default())?;
        Ok(self.glued_report.get_or_init(|| r))
    }

    pub fn run(&self, id: u32) -> Result<Outcome> {
        let c = CRITERIA.iter().find(|c| c.id == id).ok_or_else(|| {
            crate::Error::InvalidParameter(format!("no acceptance criterion {id}; valid ids are 1..={}", CRITERIA.len()))
        })?;
        let start = Instant::now();
        let (passed, detail, reports) = match id {
            1 => oracle(&["quotient-floyd-warshall"])?,
            2 => oracle(&["pseudometric", "d_z-violation"])?,
            3 => only(excursion_count_report(&ExcursionCountConfig { count_deltas: Vec::new(), ..Default::default() })?, &["E[ρ₁] at δ=0.25", "E[ρ₁] at δ=1"]),
            4 => only(excursion_count_report(&ExcursionCountConfig { rho_replicas: 0, ..Default::default() })?, &["N_δ slope"]),
            5 => whole(excursion_poisson_report(&ExcursionPoissonConfig::default())?),
            6 => whole(label_covariance_report(&LabelCovarianceConfig::default())?),
            7 => whole(snake_tail_report(&SnakeTailConfig::default())?),
            8 => whole(ball_volume_report(self.disks()?, &BallVolumeConfig::default())?),
            9 => whole(holder_boundary_report(self.disks()?, &HolderConfig::default())?),
            10 => whole(arc_neighborhood_report(self.disks()?, &ArcNeighborhoodConfig::default())?),
            11 => whole(flat_counterexample_report(&FlatConfig::default())?),
            12 => only(self.glued()?.clone(), &["near-interface ball-volume exponent"]),
            13 => only(self.glued()?.clone(), &["crossing exponent + 2·stderr"]),
            14 => whole(self_consistency_report(&SelfConsistencyConfig::default())?),
            _ => unreachable!(),
        };
        Ok(Outcome { id, name: c.name.to_string(), passed, detail, elapsed: start.elapsed(), budget: c.budget, reports })
    }

    /// Runs the given criteria (all when empty), reporting each as it ends.
    /// An error inside a criterion counts as its failure.
    pub fn run_all(&self, ids: &[u32], mut each: impl FnMut(&Outcome)) -> Vec<Outcome> {
        let ids: Vec<u32> = if ids.is_empty() { CRITERIA.iter().map(|c| c.id).collect() } else { ids.to_vec() };
        ids.iter()
            .map(|&id| {
                let start = Instant::now();
                let out = self.run(id).unwrap_or_else(|e| Outcome {
                    id,
                    name: CRITERIA.iter().find(|c| c.id == id).map_or("unknown", |c| c.name).to_string(),
                    passed: false,
                    detail: format!("error: {e}"),
                    elapsed: start.elapsed(),
                    budget: CRITERIA.iter().find(|c| c.id == id).and_then(|c| c.budget),
                    reports: Vec::new(),
                });
                each(&out);
                out
            })
            .collect()
    }
}

fn whole(report: Report) -> (bool, String, Vec<Report>) {
    (report.passed(), check_detail(&report), vec![report])
}

fn oracle(names: &[&str]) -> Result<(bool, String, Vec<Report>)> {
    let mut passed = true;
    let mut detail = Vec::new();
    for name in names {
        let o = oracles::run_oracle(name, 50, 49, SeedRecord::new(1, 0), false)?;
        passed &= o.passed();
        detail.push(format!("{name}: {}", o.detail));
    }
    Ok((passed, detail.join("; "), Vec::new()))
}
