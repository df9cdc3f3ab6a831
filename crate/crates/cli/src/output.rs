//! CSV artifacts and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::engine::{prepare, Row};
use crate::error::CliError;

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "tau",
    "value",
    "std_error",
    "n_samples",
    "quantity",
    "model",
    "method",
];
pub const MANIFEST_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, rows: &[Row], model: &str, method: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.t),
            r.tau.map(format_float).unwrap_or_default(),
            format_float(r.value),
            r.std_error.map(format_float).unwrap_or_default(),
            r.n_samples.map(|n| n.to_string()).unwrap_or_default(),
            r.quantity.clone(),
            model.to_string(),
            method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV written by [`write_csv`] back into rows.
pub fn read_csv(path: &Path) -> Result<Vec<Row>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |what: &str| CliError::Io(format!("{}: bad {what}", path.display()));
    let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let opt = |i: usize| rec.get(i).filter(|s| !s.is_empty());
        rows.push(Row {
            t: float(&rec[0], "t")?,
            tau: opt(1).map(|s| float(s, "tau")).transpose()?,
            value: float(&rec[2], "value")?,
            std_error: opt(3).map(|s| float(s, "std_error")).transpose()?,
            n_samples: opt(4)
                .map(|s| s.parse::<u64>().map_err(|_| bad("n_samples")))
                .transpose()?,
            quantity: rec[5].to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub threads: usize,
    pub csv: String,
    pub rows: usize,
    pub model: String,
    pub method: String,
    pub wall_time_seconds: f64,
}

impl Manifest {
    /// `<stem>.manifest.json` next to the CSV.
    pub fn path_for(csv: &Path) -> PathBuf {
        let stem = csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        csv.with_file_name(format!("{stem}.manifest.json"))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub model: String,
    pub method: String,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Evaluates a config without touching the filesystem.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<(Vec<Row>, String, String), CliError> {
    let plan = prepare(cfg)?;
    let rows = plan.evaluate()?;
    Ok((rows, plan.model_tag, plan.method.name().to_string()))
}

/// Runs one experiment and writes its CSV and manifest under `out_dir`.
pub fn run_experiment(
    mut cfg: ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunOutput, CliError> {
    cfg.resolve(seed_override);
    let start = Instant::now();
    let (rows, model, method) = evaluate(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let csv_path = out_dir.join(cfg.output_file());
    write_csv(&csv_path, &rows, &model, &method)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.mc.map(|m| m.seed),
        config: cfg,
        threads: rayon::current_num_threads(),
        csv: csv_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        rows: rows.len(),
        model: model.clone(),
        method: method.clone(),
        wall_time_seconds: wall,
    };
    let manifest_path = Manifest::path_for(&csv_path);
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(RunOutput {
        rows,
        model,
        method,
        csv_path,
        manifest_path,
    })
}
