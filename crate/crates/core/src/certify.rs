//! Certificate constants, the eigenvalue test and the minimal certified
//! gain.
//!
//! Two constants summarize the nonlinearities:
//!
//! - `θ_f`: quadratic-condition constant of the drift around the
//!   reference, the least `θ` with `zᵀ(f(z+x_r) − f(x_r)) ≤ θ zᵀz`.
//! - `θ_h`: global Lipschitz constant of the coupling observable.
//!
//! Nodes that know these in closed form (constant drift, linear drift,
//! sigmoid couplings) report them analytically; everything else is
//! estimated by maximizing the defining ratio over low-discrepancy
//! samples of a state box and inflating by a safety factor — sampling
//! approaches a supremum from below, so the inflation biases the
//! certificate toward soundness.
//!
//! The certificate matrix `((θ_f + c θ_h ‖L ⊗ I_p‖) I_n − Φ W_n) ⊗ I_p`
//! is diagonal, so its largest eigenvalue has the closed form
//! `max_i (θ_f + c θ_h ‖L ⊗ I_p‖ − Φ wᵢ)`; tests check it against a
//! dense eigensolver on the explicitly assembled matrix.
//!
//! The verdict is a sufficient condition only: an uncertified scenario
//! may still converge in simulation.

use nalgebra::DVector;
use thiserror::Error;

use crate::graph::GraphError;
use crate::sampling::{HaltonSequence, StateBox};
use crate::scenario::BuiltScenario;
use crate::simulate::{simulate, SimError};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("assumption estimation failed: {0}")]
    Estimation(String),

    #[error(
        "uncontrolled pilot run failed at t = {time} s, so no estimation region \
         could be derived; set estimation.region_lo/region_hi in the scenario"
    )]
    PilotFault { time: f64 },

    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How a constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Analytic,
    Sampled,
}

/// Estimated assumption constants together with their provenance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionEstimate {
    pub theta_f: f64,
    pub theta_f_method: EstimateMethod,
    pub theta_h: f64,
    pub theta_h_method: EstimateMethod,
    /// State box the sampled estimators drew from, when sampling ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_hi: Option<Vec<f64>>,
    pub sample_count: usize,
    pub seed: u64,
}

/// The full stability certificate for one scenario.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Certificate {
    pub theta_f: f64,
    pub theta_h: f64,
    pub c: f64,
    pub norm_l_kron: f64,
    pub gain: f64,
    pub pin_mask: Vec<bool>,
    pub lambda_max: f64,
    /// `lambda_max ≤ 0`. A `false` verdict means "not certified", not
    /// "unstable": the test is sufficient, not necessary.
    pub certified: bool,
    pub theta_f_method: EstimateMethod,
    pub theta_h_method: EstimateMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_hi: Option<Vec<f64>>,
    pub sample_count: usize,
    pub seed: u64,
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "theta_f      = {:.6e} ({:?})", self.theta_f, self.theta_f_method)?;
        writeln!(f, "theta_h      = {:.6e} ({:?})", self.theta_h, self.theta_h_method)?;
        writeln!(f, "c            = {:.6e}", self.c)?;
        writeln!(f, "|L (x) I_p|  = {:.6e}", self.norm_l_kron)?;
        writeln!(f, "gain         = {:.6e}", self.gain)?;
        writeln!(
            f,
            "pinned       = {}/{}",
            self.pin_mask.iter().filter(|&&w| w).count(),
            self.pin_mask.len()
        )?;
        writeln!(f, "lambda_max   = {:.6e}", self.lambda_max)?;
        write!(
            f,
            "verdict      = {}",
            if self.certified { "certified" } else { "not certified" }
        )
    }
}

/// Result of the minimal-gain search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum MinGain {
    /// Smallest gain with `lambda_max ≤ 0` (zero when already
    /// contracting).
    Gain(f64),
    /// An unpinned node keeps the positive bracket in the spectrum, so
    /// no finite gain certifies.
    Infeasible,
}

/// Closed-form largest eigenvalue of the certificate matrix:
/// `max_i (θ_f + c θ_h ‖L ⊗ I_p‖ − Φ wᵢ)`.
pub fn certificate_lambda_max(
    theta_f: f64,
    theta_h: f64,
    c: f64,
    norm_l_kron: f64,
    gain: f64,
    pin_mask: &[bool],
) -> f64 {
    debug_assert!(!pin_mask.is_empty());
    let bracket = theta_f + c * theta_h * norm_l_kron;
    pin_mask
        .iter()
        .map(|&w| bracket - if w { gain } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest gain certifying the constants, or `Infeasible` when an
/// unpinned node pins the spectrum at a positive bracket.
pub fn min_certified_gain(
    theta_f: f64,
    theta_h: f64,
    c: f64,
    norm_l_kron: f64,
    pin_mask: &[bool],
) -> MinGain {
    let bracket = theta_f + c * theta_h * norm_l_kron;
    if bracket <= 0.0 {
        return MinGain::Gain(0.0);
    }
    if pin_mask.iter().all(|&w| w) {
        MinGain::Gain(bracket)
    } else {
        MinGain::Infeasible
    }
}

/// Maximizes `zᵀ(f(z+x_r) − f(x_r)) / zᵀz` over low-discrepancy samples
/// of `region × x_r_samples`, then applies the safety inflation.
pub fn estimate_theta_f_sampled<F>(
    f: F,
    x_r_samples: &[DVector<f64>],
    region: &StateBox,
    samples: usize,
    inflation: f64,
    seed: u64,
) -> Result<f64, CertifyError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if x_r_samples.is_empty() {
        return Err(CertifyError::Estimation(
            "theta_f needs at least one reference sample".to_string(),
        ));
    }
    if samples == 0 {
        return Err(CertifyError::Estimation("sample budget is zero".to_string()));
    }
    if !region.is_nondegenerate() {
        return Err(CertifyError::Estimation(
            "estimation region is degenerate".to_string(),
        ));
    }
    let drifts_at_ref: Vec<DVector<f64>> = x_r_samples.iter().map(&f).collect();
    let mut halton = HaltonSequence::new(region.dim(), seed);
    let mut best = f64::NEG_INFINITY;
    let mut usable = 0usize;
    for s in 0..samples {
        let z = region.map_unit(&halton.next_unit());
        let den = z.norm_squared();
        if den < 1e-24 {
            continue;
        }
        let x_r = &x_r_samples[s % x_r_samples.len()];
        let shifted = f(&(&z + x_r));
        let num = z.dot(&(&shifted - &drifts_at_ref[s % x_r_samples.len()]));
        let ratio = num / den;
        if ratio.is_finite() {
            best = best.max(ratio);
            usable += 1;
        }
    }
    if usable == 0 {
        return Err(CertifyError::Estimation(
            "no usable theta_f samples (all displacements degenerate)".to_string(),
        ));
    }
    Ok(best * inflation)
}

/// Maximizes `‖h(z) − h(y)‖ / ‖z − y‖` over sampled pairs in `region`,
/// then applies the safety inflation.
///
/// Half the pairs are box-wide, half are tight pairs (`y` is a small
/// width-scaled offset of `z`) so localized steep slopes are found even
/// in high dimensions.
pub fn estimate_theta_h_sampled<H>(
    h: H,
    region: &StateBox,
    samples: usize,
    inflation: f64,
    seed: u64,
) -> Result<f64, CertifyError>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    if samples == 0 {
        return Err(CertifyError::Estimation("sample budget is zero".to_string()));
    }
    if !region.is_nondegenerate() {
        return Err(CertifyError::Estimation(
            "estimation region is degenerate".to_string(),
        ));
    }
    let dim = region.dim();
    let widths = region.widths();
    let scale = widths.amax();
    let mut halton = HaltonSequence::new(2 * dim, seed);
    let mut best = f64::NEG_INFINITY;
    let mut usable = 0usize;
    for s in 0..samples {
        let unit = halton.next_unit();
        let z = region.map_unit(&unit[..dim]);
        let y = if s % 2 == 0 {
            region.map_unit(&unit[dim..])
        } else {
            // Tight pair: probe the local slope at z.
            DVector::from_fn(dim, |k, _| {
                z[k] + (unit[dim + k] - 0.5) * widths[k] * 1e-3
            })
        };
        let den = (&z - &y).norm();
        if den < 1e-12 * scale.max(1.0) {
            continue;
        }
        let ratio = (h(&z) - h(&y)).norm() / den;
        if ratio.is_finite() {
            best = best.max(ratio);
            usable += 1;
        }
    }
    if usable == 0 {
        return Err(CertifyError::Estimation(
            "no usable theta_h pairs (all pairs degenerate)".to_string(),
        ));
    }
    Ok(best * inflation)
}

/// Derives estimation inputs from an uncontrolled pilot run: the visited
/// state box (nodes and reference, padded 20%), a displacement box for
/// `z`, and reference samples along the pilot trajectory.
fn pilot_region(
    scenario: &BuiltScenario,
) -> Result<(StateBox, StateBox, Vec<DVector<f64>>), CertifyError> {
    let pilot = scenario
        .with_gain(0.0)
        .expect("zero gain is always valid");
    let record = match simulate(&pilot) {
        Ok(r) => r,
        Err(SimError::BlowUp { time, .. }) => return Err(CertifyError::PilotFault { time }),
        Err(e) => return Err(CertifyError::Estimation(e.to_string())),
    };
    let mut visited: Vec<DVector<f64>> = Vec::new();
    for states in &record.states {
        for i in 0..record.n {
            visited.push(states.row(i).transpose());
        }
    }
    visited.extend(record.reference.iter().cloned());
    let state_box = StateBox::bounding(&visited, 0.2).map_err(CertifyError::Estimation)?;
    let ref_box =
        StateBox::bounding(&record.reference, 0.2).map_err(CertifyError::Estimation)?;
    let z_box = state_box
        .minkowski_difference(&ref_box)
        .map_err(CertifyError::Estimation)?;

    // Up to 64 reference states spread along the pilot trajectory.
    let stride = (record.reference.len() / 64).max(1);
    let x_r_samples: Vec<DVector<f64>> = record
        .reference
        .iter()
        .step_by(stride)
        .cloned()
        .collect();
    Ok((state_box, z_box, x_r_samples))
}

/// Estimation inputs when the scenario overrides the region: the box is
/// taken as the set of admissible states, displacements span its
/// difference box and reference samples are drawn from it.
fn override_region(region: &StateBox, seed: u64) -> (StateBox, StateBox, Vec<DVector<f64>>) {
    let z_box = region
        .minkowski_difference(region)
        .expect("difference of a box with itself is well-formed");
    let mut halton = HaltonSequence::new(region.dim(), seed.wrapping_add(101));
    let x_r_samples: Vec<DVector<f64>> =
        (0..32).map(|_| region.map_unit(&halton.next_unit())).collect();
    (region.clone(), z_box, x_r_samples)
}

/// Runs the estimators over the scenario's declared (or pilot-derived)
/// state box and evaluates the certificate at the scenario's gain.
pub fn certify_scenario(scenario: &BuiltScenario) -> Result<Certificate, CertifyError> {
    let model = &scenario.model;
    let p = model.state_dim();
    let cert_laplacian = model.certificate_laplacian();
    let norm_l_kron = cert_laplacian.kron_identity_norm(p)?;
    let c = model.coupling_strength();

    let needs_theta_f_sampling = model.nodes().iter().any(|n| n.quadratic_bound().is_none());
    // In pairwise-sine mode the coupling observable is the sine itself.
    let needs_theta_h_sampling = match model.coupling_mode() {
        crate::model::CouplingMode::PairwiseSine => false,
        crate::model::CouplingMode::LaplacianDiffusive => {
            model.nodes().iter().any(|n| n.coupling_lipschitz().is_none())
        }
    };

    let est = &scenario.estimation;
    let mut sample_count = 0usize;
    let mut region_used: Option<StateBox> = None;

    let sampling_inputs = if needs_theta_f_sampling || needs_theta_h_sampling {
        let (state_box, z_box, x_r_samples) = match &est.region {
            Some(region) => override_region(region, est.seed),
            None => pilot_region(scenario)?,
        };
        region_used = Some(state_box.clone());
        Some((state_box, z_box, x_r_samples))
    } else {
        None
    };

    let mut theta_f = f64::NEG_INFINITY;
    let mut theta_f_method = EstimateMethod::Analytic;
    for node in model.nodes() {
        let bound = match node.quadratic_bound() {
            Some(b) => b,
            None => {
                let (_, z_box, x_r_samples) =
                    sampling_inputs.as_ref().expect("sampling inputs prepared above");
                theta_f_method = EstimateMethod::Sampled;
                sample_count += est.samples;
                estimate_theta_f_sampled(
                    |x| node.drift(x),
                    x_r_samples,
                    z_box,
                    est.samples,
                    est.inflation,
                    est.seed,
                )?
            }
        };
        theta_f = theta_f.max(bound);
    }

    let mut theta_h = 0.0f64;
    let mut theta_h_method = EstimateMethod::Analytic;
    match model.coupling_mode() {
        crate::model::CouplingMode::PairwiseSine => {
            theta_h = 1.0;
        }
        crate::model::CouplingMode::LaplacianDiffusive => {
            for node in model.nodes() {
                let bound = match node.coupling_lipschitz() {
                    Some(b) => b,
                    None => {
                        let (state_box, _, _) =
                            sampling_inputs.as_ref().expect("sampling inputs prepared above");
                        theta_h_method = EstimateMethod::Sampled;
                        sample_count += est.samples;
                        estimate_theta_h_sampled(
                            |x| node.coupling_output(x),
                            state_box,
                            est.samples,
                            est.inflation,
                            est.seed,
                        )?
                    }
                };
                theta_h = theta_h.max(bound);
            }
        }
    }

    let gain = scenario.controller.gain();
    let pin_mask: Vec<bool> = scenario.controller.pins().to_vec();
    let lambda_max = certificate_lambda_max(theta_f, theta_h, c, norm_l_kron, gain, &pin_mask);

    Ok(Certificate {
        theta_f,
        theta_h,
        c,
        norm_l_kron,
        gain,
        pin_mask,
        lambda_max,
        certified: lambda_max <= 0.0,
        theta_f_method,
        theta_h_method,
        region_lo: region_used.as_ref().map(|b| b.lo().iter().copied().collect()),
        region_hi: region_used.as_ref().map(|b| b.hi().iter().copied().collect()),
        sample_count,
        seed: est.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{JansenRitNode, KuramotoNode, LinearNode};
    use crate::graph::Laplacian;
    use crate::model::{Controller, CouplingMode, NetworkModel, NodeDynamics};
    use crate::scenario::EstimationConfig;
    use crate::simulate::IntegrationSettings;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector, DMatrix};
    use proptest::prelude::*;
    use std::sync::Arc;

    /// Test-only oracle: assemble ((θf + cθh‖L⊗I‖)I_n − ΦW)⊗I_p densely
    /// and take the top eigenvalue with a dense symmetric eigensolver.
    fn lambda_max_dense_oracle(
        theta_f: f64,
        theta_h: f64,
        c: f64,
        norm: f64,
        gain: f64,
        pins: &[bool],
        p: usize,
    ) -> f64 {
        let n = pins.len();
        let bracket = theta_f + c * theta_h * norm;
        let mut inner = DMatrix::<f64>::identity(n, n) * bracket;
        for (i, &w) in pins.iter().enumerate() {
            if w {
                inner[(i, i)] -= gain;
            }
        }
        let full = inner.kronecker(&DMatrix::<f64>::identity(p, p));
        full.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn unit_box(dim: usize, half: f64) -> StateBox {
        StateBox::centered(DVector::from_element(dim, half)).unwrap()
    }

    #[test]
    fn lambda_max_examples() {
        // θf=2, cθh‖L⊗I‖=4, Φ=10, all pinned → −4.
        let lm = certificate_lambda_max(2.0, 1.0, 4.0, 1.0, 10.0, &[true, true, true]);
        assert_relative_eq!(lm, -4.0, max_relative = 1e-15);

        // Same constants, one node unpinned → the bracket itself (+6).
        let lm = certificate_lambda_max(2.0, 1.0, 4.0, 1.0, 10.0, &[true, false, true]);
        assert_relative_eq!(lm, 6.0, max_relative = 1e-15);
    }

    #[test]
    fn lambda_max_matches_dense_oracle_on_random_cases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let p = rng.gen_range(1..=6);
            let theta_f = rng.gen_range(-5.0..5.0);
            let theta_h = rng.gen_range(0.0..3.0);
            let c = rng.gen_range(0.0..2.0);
            let norm = rng.gen_range(0.0..10.0);
            let gain = rng.gen_range(0.0..20.0);
            let pins: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
            let fast = certificate_lambda_max(theta_f, theta_h, c, norm, gain, &pins);
            let oracle = lambda_max_dense_oracle(theta_f, theta_h, c, norm, gain, &pins, p);
            assert_relative_eq!(fast, oracle, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn min_gain_examples() {
        assert_eq!(
            min_certified_gain(2.0, 1.0, 4.0, 1.0, &[true, true]),
            MinGain::Gain(6.0)
        );
        assert_eq!(
            min_certified_gain(-1.0, 0.0, 1.0, 1.0, &[false, false]),
            MinGain::Gain(0.0)
        );
        assert_eq!(
            min_certified_gain(1.0, 0.0, 1.0, 1.0, &[true, false]),
            MinGain::Infeasible
        );
    }

    #[test]
    fn min_gain_sits_exactly_on_the_boundary() {
        let (theta_f, theta_h, c, norm) = (2.75, 0.4, 1.3, 6.1);
        let pins = vec![true; 4];
        match min_certified_gain(theta_f, theta_h, c, norm, &pins) {
            MinGain::Gain(star) => {
                let at_star = certificate_lambda_max(theta_f, theta_h, c, norm, star, &pins);
                assert!(at_star.abs() <= 1e-12, "lambda_max at the boundary: {at_star}");
                let above = certificate_lambda_max(
                    theta_f,
                    theta_h,
                    c,
                    norm,
                    star * (1.0 + 1e-6),
                    &pins,
                );
                assert!(above < 0.0);
            }
            MinGain::Infeasible => panic!("all-pinned case must be feasible"),
        }
    }

    #[test]
    fn theta_f_constant_drift_is_zero() {
        // Constant drift (phase oscillator): ratio is identically zero.
        let est = estimate_theta_f_sampled(
            |_| dvector![1.57],
            &[dvector![0.0]],
            &unit_box(1, 3.0),
            1000,
            1.05,
            0,
        )
        .unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn theta_f_analytic_path_for_linear_nodes() {
        let node = LinearNode::new(dmatrix![-1.0, 0.0; 0.0, -1.0]).unwrap();
        assert_relative_eq!(node.quadratic_bound().unwrap(), -1.0, max_relative = 1e-14);
    }

    #[test]
    fn theta_f_sampled_matches_linear_analytic_within_two_percent() {
        let a = dmatrix![0.3, -1.1, 0.6; 0.9, -0.2, 0.4; -0.5, 0.7, 0.1];
        let node = LinearNode::new(a.clone()).unwrap();
        let analytic = node.quadratic_bound().unwrap();
        let sampled = estimate_theta_f_sampled(
            |x| node.drift(x),
            &[DVector::zeros(3)],
            &unit_box(3, 1.0),
            100_000,
            1.0, // pre-inflation comparison
            0,
        )
        .unwrap();
        assert!(
            (sampled - analytic).abs() <= 0.02 * analytic.abs(),
            "sampled {sampled} vs analytic {analytic}"
        );
        // Sampling a supremum can only undershoot.
        assert!(sampled <= analytic + 1e-12);
    }

    #[test]
    fn theta_h_sine_and_identity() {
        let sine = estimate_theta_h_sampled(
            |x| DVector::from_fn(1, |_, _| x[0].sin()),
            &unit_box(1, 3.0),
            50_000,
            1.0,
            0,
        )
        .unwrap();
        assert!((sine - 1.0).abs() <= 0.01, "sine Lipschitz estimate {sine}");
        assert!(sine <= 1.0 + 1e-12);

        let ident = estimate_theta_h_sampled(
            |x: &DVector<f64>| x.clone(),
            &unit_box(2, 5.0),
            10_000,
            1.0,
            0,
        )
        .unwrap();
        assert_relative_eq!(ident, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn theta_h_scaled_sigmoid_matches_closed_form() {
        // Scalar scaled sigmoid: Lipschitz constant is scale · e0 r / 2.
        let p = JansenRitNode::default();
        let scale = 7.5;
        let est = estimate_theta_h_sampled(
            |x| DVector::from_fn(1, |_, _| scale * p.sigmoid(x[0])),
            &StateBox::new(dvector![p.v0 - 8.0], dvector![p.v0 + 8.0]).unwrap(),
            50_000,
            1.0,
            0,
        )
        .unwrap();
        let exact = scale * p.e0 * p.r / 2.0;
        assert!(
            (est - exact).abs() <= 0.01 * exact,
            "estimate {est} vs closed form {exact}"
        );
    }

    #[test]
    fn estimators_reject_degenerate_inputs() {
        let degenerate = StateBox::new(dvector![1.0], dvector![1.0]).unwrap();
        assert!(matches!(
            estimate_theta_f_sampled(
                |x: &DVector<f64>| x.clone(),
                &[dvector![0.0]],
                &degenerate,
                10,
                1.05,
                0
            ),
            Err(CertifyError::Estimation(_))
        ));
        assert!(matches!(
            estimate_theta_h_sampled(|x: &DVector<f64>| x.clone(), &degenerate, 10, 1.05, 0),
            Err(CertifyError::Estimation(_))
        ));
    }

    fn kuramoto_paper_like(gain: f64) -> BuiltScenario {
        let n = 10;
        let nodes: Vec<Arc<dyn NodeDynamics>> = (0..n)
            .map(|i| {
                Arc::new(KuramotoNode::new(i as f64 * std::f64::consts::FRAC_PI_2))
                    as Arc<dyn NodeDynamics>
            })
            .collect();
        let model = NetworkModel::new(
            nodes,
            Laplacian::complete(n),
            10.0 / n as f64,
            CouplingMode::PairwiseSine,
        )
        .unwrap();
        BuiltScenario {
            name: "kuramoto-like".to_string(),
            model,
            reference: Arc::new(KuramotoNode::new(std::f64::consts::FRAC_PI_2)),
            reference_initial: dvector![0.0],
            controller: Controller::all_pinned(n, gain).unwrap(),
            initial_states: DMatrix::from_fn(n, 1, |i, _| i as f64),
            integration: IntegrationSettings::new(1e-3, 1.0, 10).unwrap(),
            estimation: EstimationConfig::default(),
        }
    }

    #[test]
    fn kuramoto_mapping_recovers_paper_constants_but_low_gain_fails() {
        let certificate = certify_scenario(&kuramoto_paper_like(1.5)).unwrap();
        assert_eq!(certificate.theta_f, 0.0);
        assert_eq!(certificate.theta_h, 1.0);
        assert_relative_eq!(certificate.c, 1.0, max_relative = 1e-15);
        assert_relative_eq!(certificate.norm_l_kron, 10.0, max_relative = 1e-10);
        // Bracket 10 at gain 1.5: the sufficient condition is not met.
        assert_relative_eq!(certificate.lambda_max, 8.5, max_relative = 1e-10);
        assert!(!certificate.certified);
        assert_eq!(certificate.theta_f_method, EstimateMethod::Analytic);
        assert!(format!("{certificate}").contains("not certified"));

        // At the minimal certified gain the verdict flips.
        match min_certified_gain(0.0, 1.0, certificate.c, certificate.norm_l_kron, &certificate.pin_mask) {
            MinGain::Gain(star) => {
                let cert2 = certify_scenario(&kuramoto_paper_like(star + 0.5)).unwrap();
                assert!(cert2.certified);
            }
            MinGain::Infeasible => panic!("all pinned must be feasible"),
        }
    }

    #[test]
    fn linear_stable_case_certifies_and_low_gain_does_not() {
        let a = dmatrix![-2.0, 0.5; 0.5, -1.5];
        let node = Arc::new(LinearNode::new(a.clone()).unwrap());
        let model = NetworkModel::new(
            vec![node.clone(), node.clone(), node],
            Laplacian::complete(3),
            0.4,
            CouplingMode::LaplacianDiffusive,
        )
        .unwrap();
        let base = BuiltScenario {
            name: "linear-stable".to_string(),
            model,
            reference: Arc::new(LinearNode::new(a).unwrap()),
            reference_initial: dvector![0.1, 0.2],
            controller: Controller::all_pinned(3, 2.0).unwrap(),
            initial_states: DMatrix::from_fn(3, 2, |i, k| (i + k) as f64 * 0.3),
            integration: IntegrationSettings::new(1e-3, 1.0, 1).unwrap(),
            estimation: EstimationConfig::default(),
        };
        let certificate = certify_scenario(&base).unwrap();
        assert!(certificate.certified);
        assert_eq!(certificate.theta_f_method, EstimateMethod::Analytic);
        // theta_f = λmax((A+Aᵀ)/2) < 0, so bracket = θf + c·1·3.
        let bracket = certificate.theta_f + 0.4 * 1.0 * 3.0;
        assert_relative_eq!(certificate.lambda_max, bracket - 2.0, max_relative = 1e-12);

        // Gain strictly below the minimal certified gain fails.
        if let MinGain::Gain(star) =
            min_certified_gain(certificate.theta_f, 1.0, 0.4, 3.0, &certificate.pin_mask)
        {
            if star > 0.0 {
                let below = certify_scenario(&base.with_gain(star * 0.5).unwrap()).unwrap();
                assert!(!below.certified);
            }
        }
    }

    #[test]
    fn jansen_rit_certification_samples_theta_f() {
        // Two columns, one with elevated gain; theta_f has no closed form
        // so the pilot-box sampler must run.
        let epileptogenic = JansenRitNode {
            a_gain: 3.6,
            ..Default::default()
        };
        let healthy = JansenRitNode::default();
        let nodes: Vec<Arc<dyn NodeDynamics>> =
            vec![Arc::new(epileptogenic), Arc::new(healthy)];
        let model = NetworkModel::new(
            nodes,
            Laplacian::from_adjacency(&crate::graph::Adjacency::path(2)),
            0.1,
            CouplingMode::LaplacianDiffusive,
        )
        .unwrap();
        let reference = JansenRitNode {
            p_ext: 60.0,
            ..Default::default()
        };
        let scenario = BuiltScenario {
            name: "jr-two-columns".to_string(),
            model,
            reference: Arc::new(reference),
            reference_initial: DVector::zeros(6),
            controller: Controller::all_pinned(2, 30.0).unwrap(),
            initial_states: DMatrix::zeros(2, 6),
            integration: IntegrationSettings::new(1e-3, 2.0, 5).unwrap(),
            estimation: EstimationConfig {
                samples: 20_000,
                ..Default::default()
            },
        };
        let certificate = certify_scenario(&scenario).unwrap();
        assert_eq!(certificate.theta_f_method, EstimateMethod::Sampled);
        assert_eq!(certificate.theta_h_method, EstimateMethod::Analytic);
        assert!(certificate.theta_f.is_finite() && certificate.theta_f > 0.0);
        assert!(certificate.region_lo.is_some());
        assert_eq!(certificate.sample_count, 40_000);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lambda_max_is_monotone(
            theta_f in -5.0f64..5.0,
            theta_h in 0.0f64..3.0,
            c in 0.0f64..2.0,
            norm in 0.0f64..10.0,
            gain in 0.0f64..10.0,
            bump in 0.0f64..2.0,
        ) {
            let pins = [true, false, true];
            let base = certificate_lambda_max(theta_f, theta_h, c, norm, gain, &pins);
            // Non-increasing in gain.
            prop_assert!(certificate_lambda_max(theta_f, theta_h, c, norm, gain + bump, &pins) <= base + 1e-12);
            // Non-decreasing in theta_f, theta_h and c (c, theta_h ≥ 0).
            prop_assert!(certificate_lambda_max(theta_f + bump, theta_h, c, norm, gain, &pins) >= base - 1e-12);
            prop_assert!(certificate_lambda_max(theta_f, theta_h + bump, c, norm, gain, &pins) >= base - 1e-12);
            prop_assert!(certificate_lambda_max(theta_f, theta_h, c + bump, norm, gain, &pins) >= base - 1e-12);
        }
    }
}
