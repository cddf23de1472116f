//! Kuramoto phase oscillator.
//!
//! A node carries one unwrapped phase θ with constant drift ω:
//!
//! ```text
//! θ̇ᵢ = ωᵢ + (K/N) Σⱼ sin(θⱼ − θᵢ)
//! ```
//!
//! Phases are plain reals, not reduced mod 2π, so the tracking error
//! `θᵢ − θᵣ` is an ordinary difference; the order parameter applies the
//! wrap internally.

use nalgebra::DVector;

use crate::model::NodeDynamics;

/// Phase oscillator with natural frequency `omega` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KuramotoNode {
    omega: f64,
}

impl KuramotoNode {
    pub fn new(omega: f64) -> Self {
        assert!(omega.is_finite(), "natural frequency must be finite");
        Self { omega }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl NodeDynamics for KuramotoNode {
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.omega)
    }

    /// `h(θ) = sin θ`, the natural coupling observable for phase models.
    fn coupling_output(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x[0].sin())
    }

    /// Constant drift: `zᵀ(f(z+x) − f(x)) = 0`, so `θ_f = 0`.
    fn quadratic_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    /// `|sin a − sin b| ≤ |a − b|`, attained near the origin.
    fn coupling_lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// All-to-all pairwise coupling: component `i` is `(K/N) Σⱼ sin(θⱼ − θᵢ)`.
pub fn pairwise_coupling(phases: &DVector<f64>, k: f64) -> DVector<f64> {
    let n = phases.len();
    let scale = k / n as f64;
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in 0..n {
            acc += (phases[j] - phases[i]).sin();
        }
        scale * acc
    })
}
