//! Joint integration of controlled and reference dynamics with Lyapunov
//! diagnostics.
//!
//! Controlled nodes and the reference evolve as one joint state under a
//! fixed-step classical Runge-Kutta scheme, so both see identical step
//! sequences and the recorded error is an exact difference, never an
//! interpolation. The control input is recomputed inside every RK stage
//! from that stage's own error, i.e. feedback is continuous-time.
//!
//! Alongside the trajectory the recorder tracks the Lyapunov function
//! `V(e) = Σᵢ ½ eᵢᵀeᵢ` and the split of its derivative
//!
//! ```text
//! V̇(e) = v1 + v2 + v3
//! v1 = Σᵢ eᵢᵀ (f(xᵢ) − f(x_r))        drift expansion
//! v2 = Σᵢ eᵢᵀ c Σⱼ Lᵢⱼ (h(x_r) − h(xⱼ))   coupling mixing
//! v3 = Σᵢ eᵢᵀ uᵢ                      feedback work
//! ```
//!
//! which [`check_proof_bounds`] compares pointwise against the
//! certificate inequalities.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::certify::Certificate;
use crate::model::{control_input, error_state};
use crate::scenario::BuiltScenario;

/// Any state component beyond this magnitude aborts the run as a blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid integration settings: {0}")]
    Settings(String),

    #[error("state became non-finite or exceeded {threshold:.0e} at t = {time} s")]
    BlowUp {
        time: f64,
        threshold: f64,
        /// Everything recorded before the fault, for post-mortems.
        partial: Box<TrajectoryRecord>,
    },

    #[error("order parameter requires scalar phase states, model has p = {p}")]
    NotPhaseModel { p: usize },
}

/// Fixed-step integration plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    dt: f64,
    t_end: f64,
    record_stride: usize,
}

impl IntegrationSettings {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self, String> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(format!("dt must be positive, got {dt}"));
        }
        if !(t_end >= dt && t_end.is_finite()) {
            return Err(format!("t_end must be at least dt, got {t_end}"));
        }
        if record_stride == 0 {
            return Err("record_stride must be at least 1".to_string());
        }
        Ok(Self {
            dt,
            t_end,
            record_stride,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    /// Number of whole steps covering the horizon.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// One classical fourth-order Runge-Kutta step of an autonomous system.
pub fn step_rk4<F>(drift: F, state: &DVector<f64>, dt: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k1 = drift(state);
    let k2 = drift(&(state + &k1 * (dt / 2.0)));
    let k3 = drift(&(state + &k2 * (dt / 2.0)));
    let k4 = drift(&(state + &k3 * dt));
    state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Time-indexed record of one run. All series share the same length;
/// row `i` of each state matrix is node `i`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub p: usize,
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
    pub reference: Vec<DVector<f64>>,
    pub inputs: Vec<DMatrix<f64>>,
    /// Lyapunov function `V(e) ≥ 0`.
    pub lyapunov: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
    /// Per-node error norms `‖eᵢ‖` at each recorded instant.
    pub error_norms: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    fn with_capacity(n: usize, p: usize, cap: usize) -> Self {
        Self {
            n,
            p,
            times: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            reference: Vec::with_capacity(cap),
            inputs: Vec::with_capacity(cap),
            lyapunov: Vec::with_capacity(cap),
            v1: Vec::with_capacity(cap),
            v2: Vec::with_capacity(cap),
            v3: Vec::with_capacity(cap),
            error_norms: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Error matrix at recorded index `idx`.
    pub fn error_at(&self, idx: usize) -> DMatrix<f64> {
        error_state(&self.states[idx], &self.reference[idx])
    }

    /// Total error norm `‖e‖_F` at each recorded instant.
    pub fn total_error_norms(&self) -> Vec<f64> {
        self.lyapunov.iter().map(|v| (2.0 * v).sqrt()).collect()
    }

    /// Kuramoto order parameter series; defined for scalar phases only.
    pub fn order_parameter_series(&self) -> Result<Vec<f64>, SimError> {
        if self.p != 1 {
            return Err(SimError::NotPhaseModel { p: self.p });
        }
        Ok(self
            .states
            .iter()
            .map(|s| order_parameter(s.column(0).as_slice()))
            .collect())
    }
}

/// Synchrony measure `r = |N⁻¹ Σⱼ exp(i θⱼ)| ∈ [0, 1]`.
pub fn order_parameter(phases: &[f64]) -> f64 {
    let n = phases.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &theta in phases {
        re += theta.cos();
        im += theta.sin();
    }
    (re * re + im * im).sqrt() / n
}

/// `V(e) = Σᵢ ½ eᵢᵀ eᵢ = ½ ‖e‖_F²`.
pub fn lyapunov_v(errors: &DMatrix<f64>) -> f64 {
    0.5 * errors.iter().map(|x| x * x).sum::<f64>()
}

/// Splits `V̇ = Σ eᵢᵀ ėᵢ` into drift, coupling and feedback parts.
///
/// The drift part compares each node against the reference generator, so
/// the identity `v1 + v2 + v3 = Σ eᵢᵀ ėᵢ` holds exactly even when node
/// and reference drifts differ (heterogeneous frequencies, elevated
/// gains).
pub fn v_decomposition(
    scenario: &BuiltScenario,
    states: &DMatrix<f64>,
    x_r: &DVector<f64>,
    inputs: &DMatrix<f64>,
) -> (f64, f64, f64) {
    let model = &scenario.model;
    let n = model.n();
    let e = error_state(states, x_r);
    let f_r = scenario.reference.drift(x_r);

    let mut v1 = 0.0;
    for i in 0..n {
        let xi = states.row(i).transpose();
        let fi = model.node(i).drift(&xi);
        for k in 0..model.state_dim() {
            v1 += e[(i, k)] * (fi[k] - f_r[k]);
        }
    }

    let c = model.coupling_strength();
    let mut v2 = 0.0;
    match model.coupling_mode() {
        crate::model::CouplingMode::LaplacianDiffusive => {
            let h_r = scenario.reference.coupling_output(x_r);
            let lap = model.laplacian().matrix();
            for i in 0..n {
                let mut mix = DVector::zeros(model.state_dim());
                for j in 0..n {
                    let lij = lap[(i, j)];
                    if lij == 0.0 {
                        continue;
                    }
                    let xj = states.row(j).transpose();
                    let hj = model.node(j).coupling_output(&xj);
                    mix += (&h_r - hj) * lij;
                }
                for k in 0..model.state_dim() {
                    v2 += e[(i, k)] * c * mix[k];
                }
            }
        }
        crate::model::CouplingMode::PairwiseSine => {
            // The reference's pairwise term is identically zero.
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += (states[(j, 0)] - states[(i, 0)]).sin();
                }
                v2 += e[(i, 0)] * c * acc;
            }
        }
    }

    let mut v3 = 0.0;
    for i in 0..n {
        for k in 0..model.state_dim() {
            v3 += e[(i, k)] * inputs[(i, k)];
        }
    }

    (v1, v2, v3)
}

/// Integrates the scenario over `[0, t_end]`.
///
/// On blow-up (non-finite state or magnitude beyond
/// [`BLOW_UP_THRESHOLD`]) the fault carries everything recorded up to
/// the last finite step.
pub fn simulate(scenario: &BuiltScenario) -> Result<TrajectoryRecord, SimError> {
    let model = &scenario.model;
    let n = model.n();
    let p = model.state_dim();
    let settings = scenario.integration;
    let steps = settings.steps();
    let dt = settings.dt();

    // Joint state: n node rows then the reference, flattened row-major.
    let mut joint = DVector::zeros(n * p + p);
    for i in 0..n {
        for k in 0..p {
            joint[i * p + k] = scenario.initial_states[(i, k)];
        }
    }
    for k in 0..p {
        joint[n * p + k] = scenario.reference_initial[k];
    }

    let unpack = |y: &DVector<f64>| -> (DMatrix<f64>, DVector<f64>) {
        let states = DMatrix::from_fn(n, p, |i, k| y[i * p + k]);
        let x_r = DVector::from_fn(p, |k, _| y[n * p + k]);
        (states, x_r)
    };

    let drift = |y: &DVector<f64>| -> DVector<f64> {
        let (states, x_r) = unpack(y);
        let e = error_state(&states, &x_r);
        let u = control_input(&scenario.controller, &e);
        let dx = model.network_drift_unchecked(&states, &u);
        let dr = model.reference_drift_unchecked(scenario.reference.as_ref(), &x_r);
        let mut out = DVector::zeros(n * p + p);
        for i in 0..n {
            for k in 0..p {
                out[i * p + k] = dx[(i, k)];
            }
        }
        for k in 0..p {
            out[n * p + k] = dr[k];
        }
        out
    };

    let mut record = TrajectoryRecord::with_capacity(n, p, steps / settings.record_stride() + 2);
    let mut push_sample = |t: f64, y: &DVector<f64>| {
        let (states, x_r) = unpack(y);
        let e = error_state(&states, &x_r);
        let u = control_input(&scenario.controller, &e);
        let (v1, v2, v3) = v_decomposition(scenario, &states, &x_r, &u);
        record.times.push(t);
        record.lyapunov.push(lyapunov_v(&e));
        record.v1.push(v1);
        record.v2.push(v2);
        record.v3.push(v3);
        record
            .error_norms
            .push((0..n).map(|i| e.row(i).norm()).collect());
        record.states.push(states);
        record.reference.push(x_r);
        record.inputs.push(u);
    };

    push_sample(0.0, &joint);
    for step in 1..=steps {
        joint = step_rk4(drift, &joint, dt);
        let t = step as f64 * dt;
        if joint.iter().any(|x| !x.is_finite() || x.abs() > BLOW_UP_THRESHOLD) {
            return Err(SimError::BlowUp {
                time: t,
                threshold: BLOW_UP_THRESHOLD,
                partial: Box::new(record),
            });
        }
        if step % settings.record_stride() == 0 || step == steps {
            push_sample(t, &joint);
        }
    }

    Ok(record)
}

/// Slack report for one inequality along a trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundCheck {
    /// Smallest `rhs − lhs` seen; negative means the bound was crossed.
    pub worst_margin: f64,
    /// Time stamps where the bound was violated beyond tolerance.
    pub violations: Vec<f64>,
}

impl BoundCheck {
    fn new() -> Self {
        Self {
            worst_margin: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    fn observe(&mut self, t: f64, lhs: f64, rhs: f64) {
        let margin = rhs - lhs;
        self.worst_margin = self.worst_margin.min(margin);
        let tol = 1e-9 * rhs.abs().max(lhs.abs()).max(1.0);
        if margin < -tol {
            self.violations.push(t);
        }
    }
}

/// Pointwise verification of the certificate inequalities along a run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundReport {
    /// `v1 ≤ θ_f eᵀe`.
    pub drift_bound: BoundCheck,
    /// `v2 ≤ c θ_h ‖L ⊗ I_p‖ eᵀe`.
    pub coupling_bound: BoundCheck,
    /// `v1 + v2 + v3 ≤ λ_max eᵀe`.
    pub combined_bound: BoundCheck,
    /// Largest deviation in the identity `v3 = −Φ eᵀ(W ⊗ I_p)e`.
    pub feedback_identity_dev: f64,
    /// Time stamps where that identity broke the 1e-12 tolerance.
    pub feedback_identity_violations: Vec<f64>,
}

impl BoundReport {
    pub fn violation_count(&self) -> usize {
        self.drift_bound.violations.len()
            + self.coupling_bound.violations.len()
            + self.combined_bound.violations.len()
            + self.feedback_identity_violations.len()
    }
}

/// Checks, at every recorded instant, that the proof-side bounds of the
/// certificate hold on the actual trajectory. Violations are data, not
/// faults: an uncertified run is expected to cross them.
pub fn check_proof_bounds(record: &TrajectoryRecord, certificate: &Certificate) -> BoundReport {
    let mut report = BoundReport {
        drift_bound: BoundCheck::new(),
        coupling_bound: BoundCheck::new(),
        combined_bound: BoundCheck::new(),
        feedback_identity_dev: 0.0,
        feedback_identity_violations: Vec::new(),
    };
    let coupling_coeff = certificate.c * certificate.theta_h * certificate.norm_l_kron;

    for idx in 0..record.len() {
        let t = record.times[idx];
        let e = record.error_at(idx);
        let e2 = 2.0 * record.lyapunov[idx];

        report.drift_bound.observe(t, record.v1[idx], certificate.theta_f * e2);
        report.coupling_bound.observe(t, record.v2[idx], coupling_coeff * e2);
        report.combined_bound.observe(
            t,
            record.v1[idx] + record.v2[idx] + record.v3[idx],
            certificate.lambda_max * e2,
        );

        let mut pinned_e2 = 0.0;
        for (i, &pinned) in certificate.pin_mask.iter().enumerate() {
            if pinned {
                pinned_e2 += e.row(i).norm_squared();
            }
        }
        let expected_v3 = -certificate.gain * pinned_e2;
        let dev = (record.v3[idx] - expected_v3).abs();
        report.feedback_identity_dev = report.feedback_identity_dev.max(dev);
        if dev > 1e-12 * record.v3[idx].abs().max(1.0) {
            report.feedback_identity_violations.push(t);
        }
    }
    report
}
