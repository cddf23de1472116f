//! Run outputs: the timeseries CSV, the TOML summary and the run
//! directory discipline.
//!
//! Every file is written to a `.tmp` sibling and renamed into place, so
//! a failure mid-write never leaves a truncated artifact, and the
//! summary always lands before any plot is attempted.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netpin_core::certify::Certificate;
use netpin_core::metrics;
use netpin_core::simulate::{BoundReport, TrajectoryRecord};

/// Formats a float with 17 significant digits so the CSV round-trips
/// `f64` values exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes `content` atomically: temp file in the same directory, then
/// rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Column headers for a record: `t`, per-node state components
/// `x[i][k]`, reference components `xr[k]`, inputs `u[i][k]`, per-node
/// error norms `err[i]`, then `V`, `v1`, `v2`, `v3` (indices 1-based).
pub fn timeseries_header(n: usize, p: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        for k in 1..=p {
            cols.push(format!("x[{i}][{k}]"));
        }
    }
    for k in 1..=p {
        cols.push(format!("xr[{k}]"));
    }
    for i in 1..=n {
        for k in 1..=p {
            cols.push(format!("u[{i}][{k}]"));
        }
    }
    for i in 1..=n {
        cols.push(format!("err[{i}]"));
    }
    for tail in ["V", "v1", "v2", "v3"] {
        cols.push(tail.to_string());
    }
    cols
}

/// Serializes the record into delimited text with a header row.
pub fn timeseries_csv(record: &TrajectoryRecord) -> String {
    let (n, p) = (record.n, record.p);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(timeseries_header(n, p))
        .expect("in-memory csv write cannot fail");
    for idx in 0..record.len() {
        let mut row: Vec<String> = Vec::with_capacity(1 + 2 * n * p + p + n + 4);
        row.push(fmt_f64(record.times[idx]));
        let states = &record.states[idx];
        for i in 0..n {
            for k in 0..p {
                row.push(fmt_f64(states[(i, k)]));
            }
        }
        for k in 0..p {
            row.push(fmt_f64(record.reference[idx][k]));
        }
        let inputs = &record.inputs[idx];
        for i in 0..n {
            for k in 0..p {
                row.push(fmt_f64(inputs[(i, k)]));
            }
        }
        for i in 0..n {
            row.push(fmt_f64(record.error_norms[idx][i]));
        }
        row.push(fmt_f64(record.lyapunov[idx]));
        row.push(fmt_f64(record.v1[idx]));
        row.push(fmt_f64(record.v2[idx]));
        row.push(fmt_f64(record.v3[idx]));
        wtr.write_record(&row).expect("in-memory csv write cannot fail");
    }
    String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv output is utf-8")
}

pub fn write_timeseries(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    if record.is_empty() {
        bail!("refusing to write an empty trajectory record");
    }
    write_atomic(path, &timeseries_csv(record))
}

/// Key figures of one run, serialized as TOML.
#[derive(Debug, serde::Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub gain: f64,
    pub initial_error_norm: f64,
    pub final_error_norm: f64,
    /// First time the total error norm reaches 5% of its initial value.
    pub time_to_threshold_s: Option<f64>,
    /// `∫ ‖u‖² dt` over the run (trapezoidal).
    pub control_energy: f64,
    pub bound_violation_count: usize,
    pub certificate: Certificate,
}

impl RunSummary {
    pub fn new(
        scenario_name: &str,
        seed: u64,
        record: &TrajectoryRecord,
        certificate: Certificate,
        bounds: &BoundReport,
    ) -> Self {
        let norms = record.total_error_norms();
        Self {
            scenario: scenario_name.to_string(),
            seed,
            gain: certificate.gain,
            initial_error_norm: norms.first().copied().unwrap_or(0.0),
            final_error_norm: norms.last().copied().unwrap_or(0.0),
            time_to_threshold_s: metrics::time_to_error_fraction(record, 0.05),
            control_energy: metrics::control_energy(record),
            bound_violation_count: bounds.violation_count(),
            certificate,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("summary serialization cannot fail")
    }
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<()> {
    write_atomic(path, &summary.to_toml())
}

/// Resolves the output directory for a run: `--out` flag, then the
/// `NETPIN_OUT` environment variable, then `./runs`, with the scenario
/// name appended.
pub fn run_directory(flag: Option<&Path>, scenario_name: &str) -> PathBuf {
    let base = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("NETPIN_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    base.join(scenario_name)
}
