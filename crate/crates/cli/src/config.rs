//! Run configuration: defaults, JSON files and `--set key=value` overrides.
//!
//! | key            | default          | used by                                   |
//! |----------------|------------------|-------------------------------------------|
//! | `n`            | 4096             | sample-disk; ensemble reports when set    |
//! | `perimeter`    | 1.0              | sample-disk, ensemble reports             |
//! | `area`         | 1.0              | sample-disk, ensemble reports             |
//! | `random_area`  | false            | sample-disk                               |
//! | `mode`         | `"walk"`         | sample-disk                               |
//! | `replicas`     | report default   | every report; sample-disk (default 1)     |
//! | `seed`         | report default   | base seed (stream 0); sample-disk uses 1  |
//! | `workers`      | 0 (all cores)    | rayon pool size                           |
//! | `output_dir`   | `$GLUELAB_OUTPUT_DIR` or `runs` | run directories            |
//! | `deltas`       | report default   | δ sweep of the scale reports              |
//! | `reports.<name>.<field>` | report default | any field of one report config   |
//!
//! Report defaults (pass bands included) live with the report configs in the
//! core crate; `reports.<name>` patches them field by field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gluelab_core::Discretization;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const OUTPUT_ENV: &str = "GLUELAB_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub perimeter: f64,
    pub area: f64,
    pub random_area: bool,
    pub mode: Discretization,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub deltas: Option<Vec<f64>>,
    pub reports: BTreeMap<String, Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: None,
            perimeter: 1.0,
            area: 1.0,
            random_area: false,
            mode: Discretization::Walk,
            replicas: None,
            seed: None,
            workers: 0,
            output_dir: None,
            deltas: None,
            reports: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional JSON file, then `--set` overrides in order.
    pub fn resolve(file: Option<&Path>, sets: &[String]) -> anyhow::Result<Self> {
        let mut value = serde_json::to_value(Self::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let patch: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            merge(&mut value, patch);
        }
        for s in sets {
            let Some((key, raw)) = s.split_once('=') else { bail!("--set expects key=value, got {s:?}") };
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut value, key, v)?;
        }
        serde_json::from_value(value).context("invalid configuration")
    }

    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}

/// Recursive object merge; non-objects replace.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn set_path(root: &mut Value, key: &str, v: Value) -> anyhow::Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("empty segment in --set key {key:?}");
        }
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let Value::Object(map) = cur else { bail!("--set {key}: {:?} is not an object", parts[..i].join(".")) };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), v);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}
