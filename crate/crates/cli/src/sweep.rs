//! Gain sweeps: one summary row per gain, append-only output.
//!
//! The certificate constants do not depend on the gain, so they are
//! estimated once; each grid point then re-evaluates the closed-form
//! eigenvalue and runs its own simulation. Rows are appended (and
//! flushed) as each worker finishes, so an interrupted sweep keeps every
//! completed row.

use std::collections::VecDeque;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use netpin_core::certify::{certificate_lambda_max, certify_scenario, Certificate};
use netpin_core::metrics;
use netpin_core::simulate::{check_proof_bounds, simulate, SimError};
use netpin_core::BuiltScenario;

use crate::output::fmt_f64;

/// Inclusive `start:stop:step` grid.
pub fn parse_gain_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("gain grid must be start:stop:step, got `{spec}`");
    }
    let start: f64 = parts[0].parse().context("parsing grid start")?;
    let stop: f64 = parts[1].parse().context("parsing grid stop")?;
    let step: f64 = parts[2].parse().context("parsing grid step")?;
    if !(step > 0.0) || stop < start || start < 0.0 {
        bail!("gain grid needs start >= 0, stop >= start and step > 0, got `{spec}`");
    }
    let count = ((stop - start) / step).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub const SWEEP_HEADER: &str = "gain,lambda_max,certified,status,initial_error_norm,\
final_error_norm,time_to_threshold_s,control_energy,bound_violations";

struct SweepRow {
    gain: f64,
    lambda_max: f64,
    certified: bool,
    status: &'static str,
    initial_error_norm: f64,
    final_error_norm: f64,
    time_to_threshold: Option<f64>,
    control_energy: f64,
    bound_violations: usize,
}

impl SweepRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.gain),
            fmt_f64(self.lambda_max),
            self.certified,
            self.status,
            fmt_f64(self.initial_error_norm),
            fmt_f64(self.final_error_norm),
            self.time_to_threshold.map_or(String::new(), |t| fmt_f64(t)),
            fmt_f64(self.control_energy),
            self.bound_violations,
        )
    }
}

fn run_one(base: &BuiltScenario, template: &Certificate, gain: f64) -> SweepRow {
    let lambda_max = certificate_lambda_max(
        template.theta_f,
        template.theta_h,
        template.c,
        template.norm_l_kron,
        gain,
        &template.pin_mask,
    );
    let mut certificate = template.clone();
    certificate.gain = gain;
    certificate.lambda_max = lambda_max;
    certificate.certified = lambda_max <= 0.0;

    let scenario = base.with_gain(gain).expect("nonnegative gain");
    match simulate(&scenario) {
        Ok(record) => {
            let norms = record.total_error_norms();
            let bounds = check_proof_bounds(&record, &certificate);
            SweepRow {
                gain,
                lambda_max,
                certified: certificate.certified,
                status: "ok",
                initial_error_norm: norms.first().copied().unwrap_or(0.0),
                final_error_norm: norms.last().copied().unwrap_or(0.0),
                time_to_threshold: metrics::time_to_error_fraction(&record, 0.05),
                control_energy: metrics::control_energy(&record),
                bound_violations: bounds.violation_count(),
            }
        }
        Err(SimError::BlowUp { .. }) => SweepRow {
            gain,
            lambda_max,
            certified: certificate.certified,
            status: "fault",
            initial_error_norm: f64::NAN,
            final_error_norm: f64::NAN,
            time_to_threshold: None,
            control_energy: f64::NAN,
            bound_violations: 0,
        },
        Err(e) => panic!("unexpected simulation error in sweep: {e}"),
    }
}

/// Runs the grid with a bounded worker pool, appending to `path`.
/// Returns the number of rows written.
pub fn run_sweep(
    base: &BuiltScenario,
    gains: &[f64],
    path: &Path,
    workers: usize,
) -> Result<usize> {
    let template = certify_scenario(base)?;

    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let writer = Mutex::new(file);
    if fresh {
        writeln!(writer.lock().unwrap(), "{SWEEP_HEADER}")?;
    }

    let queue: Mutex<VecDeque<f64>> = Mutex::new(gains.iter().copied().collect());
    let written = Mutex::new(0usize);
    let workers = workers.max(1).min(gains.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let gain = match queue.lock().unwrap().pop_front() {
                    Some(g) => g,
                    None => break,
                };
                let row = run_one(base, &template, gain);
                let mut file = writer.lock().unwrap();
                writeln!(file, "{}", row.to_csv()).expect("sweep row write");
                file.flush().expect("sweep row flush");
                *written.lock().unwrap() += 1;
            });
        }
    });

    Ok(written.into_inner().unwrap())
}
