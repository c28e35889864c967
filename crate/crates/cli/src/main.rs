//! `gluelab`: sample disks, glue them, run reports, oracles and the
//! acceptance suite.
//!
//! Exit codes: 0 pass, 1 a check or criterion failed, 2 usage or
//! configuration error, 3 resource limit.

mod config;
mod reports;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gluelab_core::acceptance::{oracles, Suite, CRITERIA};
use gluelab_core::diskmetric::{build_disk, write_disk, DiskParams, FiniteGeodesicSpace};
use gluelab_core::gluing::{quotient_space, write_glued, disk_union};
use gluelab_core::scaling::{flat_counterexample_report, FlatConfig};
use gluelab_core::{Error, GluingSchema, Report, SeedRecord};

use config::RunConfig;
use reports::{run_report, UnknownReport, REPORTS};

#[derive(Parser)]
#[command(name = "gluelab", version, about = "Brownian disk simulator and verification lab")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; see `--set` for the keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set reports.snake-tail.half_len=255`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Root for run directories (default `$GLUELAB_OUTPUT_DIR`, else `runs`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Brownian disks and write `.bdisk` containers with JSON sidecars.
    SampleDisk {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        perimeter: Option<f64>,
        #[arg(long, conflicts_with = "random_area")]
        area: Option<f64>,
        #[arg(long)]
        random_area: bool,
        /// `walk` or `gaussian`.
        #[arg(long)]
        mode: Option<String>,
        /// Also write boundary-to-boundary distances as CSV.
        #[arg(long)]
        dump_distances: bool,
    },
    /// Glue disks along a schema, or build the flat counterexample.
    Glue {
        #[arg(long, required_unless_present = "flat_counterexample")]
        schema: Option<PathBuf>,
        #[arg(long)]
        flat_counterexample: bool,
        #[arg(long, default_value_t = 256)]
        m: usize,
    },
    /// Run named reports (JSON, table and CSV under `reports/`).
    Report {
        #[arg(required = true)]
        names: Vec<String>,
        /// Comma-separated δ sweep for the scale reports.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compare the metric kernels with brute-force references.
    OracleCheck {
        /// Comma-separated oracle names (default: all).
        #[arg(long, value_delimiter = ',')]
        oracles: Option<Vec<String>>,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 49)]
        n: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run the acceptance criteria (all by default).
    Acceptance {
        /// Comma-separated criterion ids.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<Error>() {
            return match core {
                Error::ResourceLimit(_) => 3,
                Error::NumericalFailure(_) | Error::Io(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<UnknownReport>().is_some() {
            return 2;
        }
    }
    2
}

/// A fresh `runs/<timestamp>-<name>/` directory holding the resolved config.
fn run_dir(cfg: &RunConfig, name: &str) -> anyhow::Result<PathBuf> {
    let root = cfg.output_root();
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    let mut dir = root.join(format!("{stamp}-{name}"));
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{stamp}-{name}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    Ok(dir)
}

fn save_report(dir: &Path, report: &Report) -> anyhow::Result<()> {
    let d = dir.join("reports");
    fs::create_dir_all(&d)?;
    fs::write(d.join(format!("{}.json", report.name)), report.to_json())?;
    fs::write(d.join(format!("{}.txt", report.name)), report.to_table())?;
    fs::write(d.join(format!("{}.csv", report.name)), report.pairs_csv())?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let c = &cli.common;
    let mut cfg = RunConfig::resolve(c.config.as_deref(), &c.sets)?;
    if c.out.is_some() {
        cfg.output_dir = c.out.clone();
    }
    cfg.seed = c.seed.or(cfg.seed);
    cfg.replicas = c.replicas.or(cfg.replicas);
    cfg.workers = c.workers.unwrap_or(cfg.workers);
    if cfg.workers > 0 {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    match cli.command {
        Command::SampleDisk { n, perimeter, area, random_area, mode, dump_distances } => {
            cfg.n = n.or(cfg.n);
            cfg.perimeter = perimeter.unwrap_or(cfg.perimeter);
            cfg.area = area.unwrap_or(cfg.area);
            cfg.random_area |= random_area;
            if let Some(m) = mode {
                cfg.mode = serde_json::from_value(serde_json::Value::String(m.clone()))
                    .map_err(|_| anyhow::anyhow!("unknown mode {m:?}; use walk or gaussian"))?;
            }
            sample_disks(&cfg, dump_distances)
        }
        Command::Glue { schema, flat_counterexample, m } => {
            if flat_counterexample {
                let report = flat_counterexample_report(&FlatConfig { m, ..Default::default() })?;
                let dir = run_dir(&cfg, "flat-counterexample")?;
                save_report(&dir, &report)?;
                print!("{}", report.to_table());
                println!("wrote {}", dir.display());
                Ok(report.passed())
            } else {
                glue(&cfg, schema.as_deref().context("--schema is required")?)
            }
        }
        Command::Report { names, deltas, n } => {
            cfg.deltas = deltas.or(cfg.deltas);
            cfg.n = n.or(cfg.n);
            if let Some(bad) = names.iter().find(|x| !REPORTS.contains(&x.as_str())) {
                bail!(UnknownReport(bad.clone()));
            }
            let dir = run_dir(&cfg, &names.join("+"))?;
            let mut ok = true;
            for name in &names {
                let report = run_report(name, &cfg)?;
                save_report(&dir, &report)?;
                print!("{}", report.to_table());
                ok &= report.passed();
            }
            println!("wrote {}", dir.display());
            Ok(ok)
        }
        Command::OracleCheck { oracles: names, instances, n, inject_fault } => {
            let names: Vec<String> = match names {
                Some(v) => v.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                None => oracles::ORACLES.iter().map(|s| s.to_string()).collect(),
            };
            if names.is_empty() {
                bail!(Error::InvalidParameter(format!(
                    "empty oracle list; valid oracles: {}",
                    oracles::ORACLES.join(", ")
                )));
            }
            let seed = SeedRecord::new(cfg.seed.unwrap_or(1), 0);
            let mut ok = true;
            for name in &names {
                let o = oracles::run_oracle(name, instances, n, seed, inject_fault)?;
                println!("{} {:<24} {}", if o.passed() { "PASS" } else { "FAIL" }, o.name, o.detail);
                ok &= o.passed();
            }
            Ok(ok)
        }
        Command::Acceptance { only } => {
            let ids = only.unwrap_or_default();
            if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|c| c.id == **i)) {
                bail!(Error::InvalidParameter(format!("no criterion {bad}; valid ids are 1..={}", CRITERIA.len())));
            }
            let dir = run_dir(&cfg, "acceptance")?;
            let outcomes = Suite::new().run_all(&ids, |o| println!("{}", o.line()));
            for o in &outcomes {
                for r in &o.reports {
                    save_report(&dir, r)?;
                }
            }
            fs::write(dir.join("acceptance.json"), serde_json::to_string_pretty(&outcomes)?)?;
            let passed = outcomes.iter().filter(|o| o.passed).count();
            println!("acceptance: {passed} of {} passed; wrote {}", outcomes.len(), dir.display());
            Ok(passed == outcomes.len())
        }
    }
}

fn sample_disks(cfg: &RunConfig, dump: bool) -> anyhow::Result<bool> {
    let n = cfg.n.unwrap_or(4096);
    let base = SeedRecord::new(cfg.seed.unwrap_or(1), 0);
    let dir = run_dir(cfg, "sample-disk")?;
    for i in 0..cfg.replicas.unwrap_or(1) {
        let seed = if i == 0 { base } else { base.child(i as u64) };
        let params = if cfg.random_area {
            DiskParams::random_area(cfg.perimeter, n, seed)
        } else {
            DiskParams::fixed(cfg.perimeter, cfg.area, n, seed)
        }
        .with_mode(cfg.mode);
        let disk = build_disk(&params)?;
        let stem = dir.join(format!("disk-{i:03}"));
        let mut w = BufWriter::new(File::create(stem.with_extension("bdisk"))?);
        write_disk(&mut w, &disk)?;
        w.flush()?;
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&disk.summary())?)?;
        if dump {
            let disk = Arc::new(disk);
            let space = FiniteGeodesicSpace::from_disk(disk.clone())?;
            let bnd = space.boundary(0);
            let mut out = BufWriter::new(File::create(stem.with_extension("distances.csv"))?);
            writeln!(out, "r_i,r_j,distance")?;
            let rows = space.distances_from_many(&bnd.iter().map(|b| b.vertex).collect::<Vec<_>>(), f64::INFINITY)?;
            for (a, row) in bnd.iter().zip(&rows) {
                for b in &bnd {
                    writeln!(out, "{},{},{}", a.coord, b.coord, row[b.vertex])?;
                }
            }
            out.flush()?;
        }
        println!("{}", stem.with_extension("bdisk").display());
    }
    Ok(true)
}

fn glue(cfg: &RunConfig, schema_path: &Path) -> anyhow::Result<bool> {
    let schema = GluingSchema::load(schema_path)?;
    let base = schema_path.parent().unwrap_or(Path::new("."));
    let disks = schema.load_disks(base)?;
    let glued = quotient_space(disk_union(disks.into_iter().map(Arc::new))?, &schema.identifications)?;
    let dir = run_dir(cfg, "glue")?;
    fs::write(dir.join("schema.json"), serde_json::to_string_pretty(&schema)?)?;
    let path = dir.join("glued.bglue");
    let mut w = BufWriter::new(File::create(&path)?);
    write_glued(&mut w, &glued)?;
    w.flush()?;
    let summary = serde_json::json!({
        "vertices": glued.space.len(),
        "pieces": glued.space.n_pieces(),
        "interface_points": glued.interface.len(),
        "interface_length": glued.interface_length(),
        "total_area": glued.space.total_area(),
        "provenance": glued.space.provenance(),
    });
    fs::write(dir.join("glued.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{}", path.display());
    Ok(true)
}
