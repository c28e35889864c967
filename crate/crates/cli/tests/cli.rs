use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gluelab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gluelab"))
        .args(args)
        .env("GLUELAB_OUTPUT_DIR", out)
        .output()
        .expect("spawn gluelab")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn run_dirs(root: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn sample_disk_writes_container_and_sidecar_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sample-disk", "--n", "1024", "--perimeter", "1", "--random-area", "--seed", "5"];
    let a = gluelab(tmp.path(), &args);
    assert!(a.status.success(), "{}", text(&a));
    let b = gluelab(tmp.path(), &args);
    assert!(b.status.success());
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 2);
    for d in &dirs {
        assert!(d.join("config.json").exists());
        assert!(d.join("disk-000.json").exists());
    }
    let x = std::fs::read(dirs[0].join("disk-000.bdisk")).unwrap();
    let y = std::fs::read(dirs[1].join("disk-000.bdisk")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(dirs[0].join("disk-000.json")).unwrap()).unwrap();
    assert_eq!(summary["params"]["area"], "random");
}

#[test]
fn n_one_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["sample-disk", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("n must be ≥ 2"), "{}", text(&o));
}

#[test]
fn unknown_report_lists_valid_names() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["report", "no-such-report"]);
    assert_eq!(o.status.code(), Some(2));
    let t = text(&o);
    assert!(t.contains("excursion-count") && t.contains("glued-locality"), "{t}");
}

#[test]
fn excursion_count_report_has_mean_rho1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["report", "excursion-count", "--replicas", "1000"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", text(&o));
    let dir = &run_dirs(tmp.path())[0];
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("reports/excursion-count.json")).unwrap()).unwrap();
    assert!(json["stats"]["mean_rho1"].as_f64().unwrap() > 0.0);
    assert_eq!(json["parameters"]["rho_replicas"], 1000);
    assert!(dir.join("reports/excursion-count.csv").exists());
}

#[test]
fn oracle_check_passes_and_catches_injected_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = gluelab(tmp.path(), &["oracle-check", "--instances", "3", "--n", "25"]);
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok));
    let bad = gluelab(tmp.path(), &["oracle-check", "--instances", "2", "--n", "25", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1), "{}", text(&bad));
    let empty = gluelab(tmp.path(), &["oracle-check", "--oracles", ""]);
    assert_eq!(empty.status.code(), Some(2), "{}", text(&empty));
}

#[test]
fn glue_schema_round_trip_and_missing_piece() {
    let tmp = tempfile::tempdir().unwrap();
    let s = gluelab(tmp.path(), &["sample-disk", "--n", "257", "--replicas", "2"]);
    assert!(s.status.success(), "{}", text(&s));
    let disk_dir = run_dirs(tmp.path())[0].clone();
    let schema = serde_json::json!({
        "pieces": [{"file": "disk-000.bdisk"}, {"file": "disk-001.bdisk"}],
        "identifications": [{"a": {"piece": 0, "arc": [0.0, 0.5]}, "b": {"piece": 1, "arc": [0.0, 0.5]}, "orientation": "reversed"}]
    });
    let path = disk_dir.join("schema.json");
    std::fs::write(&path, schema.to_string()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let g = gluelab(out.path(), &["glue", "--schema", path.to_str().unwrap()]);
    assert!(g.status.success(), "{}", text(&g));
    let glue_dir = &run_dirs(out.path())[0];
    assert!(glue_dir.join("glued.bglue").metadata().unwrap().len() > 0);

    let missing = disk_dir.join("missing.json");
    std::fs::write(&missing, schema.to_string().replace("disk-001", "disk-999")).unwrap();
    let m = gluelab(out.path(), &["glue", "--schema", missing.to_str().unwrap()]);
    assert_eq!(m.status.code(), Some(2), "{}", text(&m));
}

#[test]
fn flat_counterexample_ratio_is_one_half() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["glue", "--flat-counterexample", "--m", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let dir = &run_dirs(tmp.path())[0];
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("reports/flat-counterexample.json")).unwrap()).unwrap();
    assert!((json["stats"]["ratio_mean"].as_f64().unwrap() - 0.5).abs() < 0.05);
}

#[test]
fn set_overrides_reach_the_report_and_bad_keys_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(
        tmp.path(),
        &["report", "snake-tail", "--set", "reports.snake-tail.half_len=15", "--set", "reports.snake-tail.excursions=500"],
    );
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", text(&o));
    let dir = &run_dirs(tmp.path())[0];
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("reports/snake-tail.json")).unwrap()).unwrap();
    assert_eq!(json["parameters"]["half_len"], 15);
    let cfg: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["reports"]["snake-tail"]["excursions"], 500);

    let bad = gluelab(tmp.path(), &["report", "snake-tail", "--set", "bogus=1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn acceptance_subset_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["acceptance", "--only", "1,11"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("PASS [ 1]") && t.contains("PASS [11]"), "{t}");
    let bad = gluelab(tmp.path(), &["acceptance", "--only", "99"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn resource_limit_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(tmp.path(), &["sample-disk", "--n", "64", "--mode", "gaussian", "--set", "n=40000"]);
    // the flag wins over --set; a 64-point gaussian disk is fine
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let big = gluelab(tmp.path(), &["sample-disk", "--n", "40000", "--mode", "gaussian"]);
    assert_eq!(big.status.code(), Some(3), "{}", text(&big));
}
