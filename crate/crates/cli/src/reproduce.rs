//! Reproduction of the two bundled experiments with pass/fail checks.
//!
//! The thresholds here mirror the acceptance suite: the Kuramoto network
//! must track the reference within 10% of its initial per-node error and
//! show a 5x decay between the first and last fifth of the run; the
//! Jansen-Rit pair must suppress the seizure (monotone error decay after
//! the transient, final energy under 1% of peak) while the uncontrolled
//! run keeps oscillating.

use anyhow::Result;
use netpin_core::metrics;
use netpin_core::simulate::{simulate, TrajectoryRecord};
use netpin_core::Scenario;

pub const KURAMOTO_TOML: &str = include_str!("../../../scenarios/kuramoto_paper.toml");
pub const JANSEN_RIT_TOML: &str = include_str!("../../../scenarios/jansen_rit_paper.toml");

pub struct CheckLine {
    pub label: String,
    pub pass: bool,
    pub details: String,
}

impl CheckLine {
    fn new(label: &str, pass: bool, details: String) -> Self {
        Self {
            label: label.to_string(),
            pass,
            details,
        }
    }
}

fn pyramidal_series(record: &TrajectoryRecord, node: usize) -> Vec<f64> {
    record
        .states
        .iter()
        .map(|s| s[(node, 1)] - s[(node, 2)])
        .collect()
}

pub fn check_kuramoto(record: &TrajectoryRecord) -> Vec<CheckLine> {
    let last = record.len() - 1;
    let worst_ratio = (0..record.n)
        .map(|i| record.error_norms[last][i] / record.error_norms[0][i])
        .fold(0.0f64, f64::max);

    let norms = record.total_error_norms();
    let t_end = *record.times.last().unwrap();
    let early = metrics::time_average(&record.times, &norms, 0.0, 0.2 * t_end);
    let late = metrics::time_average(&record.times, &norms, 0.8 * t_end, t_end);
    let factor = early / late;

    vec![
        CheckLine::new(
            "kuramoto per-node error at t_end <= 10% of initial",
            worst_ratio <= 0.10,
            format!("worst ratio {worst_ratio:.4}"),
        ),
        CheckLine::new(
            "kuramoto early/late mean error factor >= 5",
            factor >= 5.0,
            format!("factor {factor:.2}"),
        ),
    ]
}

pub fn check_jansen_rit(
    controlled: &TrajectoryRecord,
    uncontrolled: &TrajectoryRecord,
) -> Vec<CheckLine> {
    let v = &controlled.lyapunov;
    let v_peak = v.iter().cloned().fold(0.0f64, f64::max);
    let v_final = *v.last().unwrap();
    let uphills = metrics::uphill_violations_after(&controlled.times, v, 0.5, 1e-6);

    let t_end = *controlled.times.last().unwrap();
    let pp_controlled = metrics::peak_to_peak(
        &controlled.times,
        &pyramidal_series(controlled, 0),
        t_end - 1.0,
        t_end,
    );
    let pp_uncontrolled = metrics::peak_to_peak(
        &uncontrolled.times,
        &pyramidal_series(uncontrolled, 0),
        0.0,
        t_end,
    );

    vec![
        CheckLine::new(
            "jansen-rit error decays monotonically after 0.5 s",
            uphills == 0,
            format!("{uphills} uphill violations"),
        ),
        CheckLine::new(
            "jansen-rit final V < 1% of peak V",
            v_final < 0.01 * v_peak,
            format!("V_final/V_peak = {:.2e}", v_final / v_peak),
        ),
        CheckLine::new(
            "jansen-rit uncontrolled column keeps oscillating (>5x)",
            pp_uncontrolled > 5.0 * pp_controlled,
            format!(
                "uncontrolled p-p {pp_uncontrolled:.2} mV vs controlled final-second p-p {pp_controlled:.2e} mV"
            ),
        ),
    ]
}

/// Runs both bundled experiments, printing one line per check.
/// Returns `true` when everything passed.
pub fn run_reproduction() -> Result<bool> {
    let mut all_pass = true;
    let mut report = |lines: Vec<CheckLine>| {
        for line in lines {
            let verdict = if line.pass { "PASS" } else { "FAIL" };
            println!("{verdict}  {} ({})", line.label, line.details);
            all_pass &= line.pass;
        }
    };

    let kuramoto = Scenario::parse(KURAMOTO_TOML)?.build()?;
    let record = simulate(&kuramoto)?;
    report(check_kuramoto(&record));

    let jansen = Scenario::parse(JANSEN_RIT_TOML)?.build()?;
    let controlled = simulate(&jansen)?;
    let uncontrolled = simulate(&jansen.with_gain(0.0)?)?;
    report(check_jansen_rit(&controlled, &uncontrolled));

    Ok(all_pass)
}
