//! Report registry: name → configured run of a core report.

use std::sync::Arc;

use anyhow::bail;
use gluelab_core::diskmetric::DiskInstance;
use gluelab_core::scaling::*;
use gluelab_core::{Report, SeedRecord};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{merge, RunConfig};

pub const REPORTS: &[&str] = &[
    "excursion-count",
    "excursion-poisson",
    "label-covariance",
    "snake-tail",
    "ball-volume",
    "holder-boundary",
    "arc-neighborhood",
    "flat-counterexample",
    "glued-locality",
    "self-consistency",
    "geodesic-boundary",
];

/// Error for an unknown report name; maps to the usage exit code.
#[derive(Debug)]
pub struct UnknownReport(pub String);

impl std::fmt::Display for UnknownReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown report {:?}; valid names: {}", self.0, REPORTS.join(", "))
    }
}

impl std::error::Error for UnknownReport {}

/// Default config patched by the generic run keys, then by `reports.<name>`.
fn configure<T: Default + Serialize + DeserializeOwned>(name: &str, run: &RunConfig, generic: Value) -> anyhow::Result<T> {
    let mut v = serde_json::to_value(T::default())?;
    merge(&mut v, generic);
    if let Some(p) = run.reports.get(name) {
        merge(&mut v, p.clone());
    }
    Ok(serde_json::from_value(v)?)
}

fn obj(pairs: Vec<(&str, Option<Value>)>) -> Value {
    Value::Object(pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect())
}

fn seed(run: &RunConfig) -> Option<Value> {
    run.seed.map(|s| json!(SeedRecord::new(s, 0)))
}

fn ensemble(run: &RunConfig) -> anyhow::Result<Vec<Arc<DiskInstance>>> {
    let cfg: EnsembleConfig = configure(
        "ensemble",
        run,
        obj(vec![
            ("n", run.n.map(|n| json!(n))),
            ("perimeter", Some(json!(run.perimeter))),
            ("area", Some(json!(run.area))),
            ("replicas", run.replicas.map(|r| json!(r))),
            ("mode", Some(json!(run.mode))),
            ("seed", run.seed.map(|s| json!(SeedRecord::new(s, 1)))),
        ]),
    )?;
    Ok(build_ensemble(&cfg)?)
}

pub fn run_report(name: &str, run: &RunConfig) -> anyhow::Result<Report> {
    let reps = run.replicas.map(|r| json!(r));
    let deltas = run.deltas.as_ref().map(|d| json!(d));
    let report = match name {
        "excursion-count" => excursion_count_report(&configure::<ExcursionCountConfig>(
            name,
            run,
            obj(vec![("rho_replicas", reps.clone()), ("count_replicas", reps), ("count_deltas", deltas), ("seed", seed(run))]),
        )?)?,
        "excursion-poisson" => excursion_poisson_report(&configure::<ExcursionPoissonConfig>(
            name,
            run,
            obj(vec![("replicas", reps), ("seed", seed(run))]),
        )?)?,
        "label-covariance" => label_covariance_report(&configure::<LabelCovarianceConfig>(
            name,
            run,
            obj(vec![("replicas", reps), ("seed", seed(run))]),
        )?)?,
        "snake-tail" => snake_tail_report(&configure::<SnakeTailConfig>(
            name,
            run,
            obj(vec![("excursions", reps), ("seed", seed(run))]),
        )?)?,
        "ball-volume" => {
            let cfg: BallVolumeConfig = configure(name, run, obj(vec![("deltas", deltas), ("seed", seed(run))]))?;
            ball_volume_report(&ensemble(run)?, &cfg)?
        }
        "holder-boundary" => {
            let cfg: HolderConfig = configure(name, run, json!({}))?;
            holder_boundary_report(&ensemble(run)?, &cfg)?
        }
        "arc-neighborhood" => {
            let cfg: ArcNeighborhoodConfig = configure(name, run, obj(vec![("deltas", deltas), ("seed", seed(run))]))?;
            arc_neighborhood_report(&ensemble(run)?, &cfg)?
        }
        "flat-counterexample" => flat_counterexample_report(&configure::<FlatConfig>(name, run, json!({}))?)?,
        "glued-locality" => {
            let g: GluedEnsembleConfig = configure(
                "glued-ensemble",
                run,
                obj(vec![
                    ("n", run.n.map(|n| json!(n))),
                    ("perimeter", Some(json!(run.perimeter))),
                    ("area", Some(json!(run.area))),
                    ("replicas", reps),
                    ("seed", run.seed.map(|s| json!(SeedRecord::new(s, 1)))),
                ]),
            )?;
            let cfg: GluedLocalityConfig = configure(name, run, obj(vec![("volume_deltas", deltas), ("seed", seed(run))]))?;
            glued_locality_report(&build_glued_ensemble(&g)?, &cfg)?
        }
        "self-consistency" => self_consistency_report(&configure::<SelfConsistencyConfig>(
            name,
            run,
            obj(vec![("replicas", reps), ("seed", seed(run))]),
        )?)?,
        "geodesic-boundary" => geodesic_boundary_report(&configure::<GeodesicBoundaryConfig>(
            name,
            run,
            obj(vec![("replicas", reps), ("seed", seed(run))]),
        )?)?,
        other => bail!(UnknownReport(other.to_string())),
    };
    Ok(report)
}
