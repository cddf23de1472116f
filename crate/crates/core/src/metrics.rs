//! Convergence metrics over trajectory records.
//!
//! Shared by the run summaries, the `reproduce` command and the
//! acceptance suite, so every consumer applies identical definitions.

use crate::simulate::TrajectoryRecord;

/// First recorded time where the total error norm drops to
/// `fraction · ‖e(0)‖`, if it ever does.
pub fn time_to_error_fraction(record: &TrajectoryRecord, fraction: f64) -> Option<f64> {
    let norms = record.total_error_norms();
    let initial = *norms.first()?;
    let target = fraction * initial;
    norms
        .iter()
        .zip(&record.times)
        .find(|(n, _)| **n <= target)
        .map(|(_, t)| *t)
}

/// Control effort `∫ ‖u‖_F² dt` over the recorded samples (trapezoid).
pub fn control_energy(record: &TrajectoryRecord) -> f64 {
    let sq: Vec<f64> = record
        .inputs
        .iter()
        .map(|u| u.iter().map(|x| x * x).sum::<f64>())
        .collect();
    trapezoid(&record.times, &sq)
}

/// Trapezoidal integral of an unevenly sampled series.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum()
}

/// Time average of a series restricted to `[t_from, t_to]`.
pub fn time_average(times: &[f64], values: &[f64], t_from: f64, t_to: f64) -> f64 {
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= t_from && times[i] <= t_to)
        .collect();
    if idx.len() < 2 {
        return idx.first().map_or(0.0, |&i| values[i]);
    }
    let ts: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let vs: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    trapezoid(&ts, &vs) / (ts.last().unwrap() - ts.first().unwrap())
}

/// Peak-to-peak spread of a series restricted to `[t_from, t_to]`.
pub fn peak_to_peak(times: &[f64], values: &[f64], t_from: f64, t_to: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..times.len() {
        if times[i] >= t_from && times[i] <= t_to {
            lo = lo.min(values[i]);
            hi = hi.max(values[i]);
        }
    }
    if hi < lo {
        0.0
    } else {
        hi - lo
    }
}

/// Number of uphill violations of a decaying series after a transient:
/// samples with `v[k+1] > v[k] + allowance·max(1, v[k])` and
/// `t[k] ≥ t_transient`.
pub fn uphill_violations_after(
    times: &[f64],
    values: &[f64],
    t_transient: f64,
    allowance: f64,
) -> usize {
    let mut count = 0;
    for k in 0..values.len().saturating_sub(1) {
        if times[k] >= t_transient && values[k + 1] > values[k] + allowance * values[k].max(1.0) {
            count += 1;
        }
    }
    count
}
