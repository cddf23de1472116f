//! Jansen-Rit cortical column.
//!
//! Six states per column: three post-synaptic potentials and their
//! derivatives, `(y0, y1, y2, ẏ0, ẏ1, ẏ2)`. Potentials in mV, rates in
//! 1/s. The second-order synaptic kinetics read
//!
//! ```text
//! ÿ0 = A a S(y1 − y2)                  − 2a ẏ0 − a² y0
//! ÿ1 = A a (p_ext + q + C2 S(C1 y0))   − 2a ẏ1 − a² y1
//! ÿ2 = B b C4 S(C3 y0)                 − 2b ẏ2 − b² y2
//! ```
//!
//! with the firing-rate sigmoid `S(v) = 2 e0 / (1 + exp(r (v0 − v)))` and
//! `q` the coupling input arriving on the excitatory channel. Between
//! columns the coupling observable is a scaled sigmoid of the pyramidal
//! potential `y1 − y2`, injected into the same excitatory channel.
//!
//! The pyramidal membrane potential `y1 − y2` is the measured output.
//! An elevated synaptic gain `A` pushes a column into large
//! spike-like oscillations.

use nalgebra::DVector;

use crate::model::NodeDynamics;

/// Index of the excitatory post-synaptic potential in the state vector.
pub const PYRAMIDAL_EXC: usize = 1;
/// Index of the inhibitory post-synaptic potential in the state vector.
pub const PYRAMIDAL_INH: usize = 2;

/// Excitatory velocity channel that receives external and coupling input.
const INPUT_CHANNEL: usize = 4;

/// Jansen-Rit column parameters; defaults are the standard values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JansenRitNode {
    /// Excitatory synaptic gain A (mV).
    pub a_gain: f64,
    /// Inhibitory synaptic gain B (mV).
    pub b_gain: f64,
    /// Excitatory inverse time constant a (1/s).
    pub a: f64,
    /// Inhibitory inverse time constant b (1/s).
    pub b: f64,
    /// Connectivity constants C1..C4 (dimensionless).
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Sigmoid midpoint v0 (mV).
    pub v0: f64,
    /// Half of the maximal firing rate e0 (1/s).
    pub e0: f64,
    /// Sigmoid steepness r (1/mV).
    pub r: f64,
    /// External input rate (1/s).
    pub p_ext: f64,
    /// Dimensionless scale of the inter-column coupling observable.
    pub coupling_scale: f64,
}

impl Default for JansenRitNode {
    fn default() -> Self {
        let c = 135.0;
        Self {
            a_gain: 3.25,
            b_gain: 22.0,
            a: 100.0,
            b: 50.0,
            c1: c,
            c2: 0.8 * c,
            c3: 0.25 * c,
            c4: 0.25 * c,
            v0: 6.0,
            e0: 2.5,
            r: 0.56,
            p_ext: 120.0,
            coupling_scale: 1.0,
        }
    }
}

impl JansenRitNode {
    /// Checks the parameter invariants (positive kinetics and sigmoid
    /// constants).
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("a", self.a), ("b", self.b), ("r", self.r), ("e0", self.e0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("Jansen-Rit parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Potential-to-rate sigmoid `S(v) = 2 e0 / (1 + exp(r (v0 − v)))`,
    /// with output in `(0, 2 e0)` and maximum slope `e0 r / 2` at `v0`.
    pub fn sigmoid(&self, v: f64) -> f64 {
        2.0 * self.e0 / (1.0 + (self.r * (self.v0 - v)).exp())
    }

    /// Pyramidal membrane potential `y1 − y2`.
    pub fn pyramidal_potential(state: &DVector<f64>) -> f64 {
        state[PYRAMIDAL_EXC] - state[PYRAMIDAL_INH]
    }
}

/// Right-hand side of one column; `coupling_in` is a firing rate (1/s)
/// added to the excitatory input channel alongside `p_ext`.
///
/// Non-finite states propagate NaN components, which the integrator
/// surfaces as a fault at the offending time stamp.
pub fn jansen_rit_drift(
    state: &DVector<f64>,
    params: &JansenRitNode,
    coupling_in: f64,
) -> DVector<f64> {
    let (y0, y1, y2) = (state[0], state[1], state[2]);
    let (y3, y4, y5) = (state[3], state[4], state[5]);
    let p = params;
    let mut out = DVector::zeros(6);
    out[0] = y3;
    out[1] = y4;
    out[2] = y5;
    out[3] = p.a_gain * p.a * p.sigmoid(y1 - y2) - 2.0 * p.a * y3 - p.a * p.a * y0;
    out[4] = p.a_gain * p.a * (p.p_ext + coupling_in + p.c2 * p.sigmoid(p.c1 * y0))
        - 2.0 * p.a * y4
        - p.a * p.a * y1;
    out[5] = p.b_gain * p.b * p.c4 * p.sigmoid(p.c3 * y0) - 2.0 * p.b * y5 - p.b * p.b * y2;
    out
}

impl NodeDynamics for JansenRitNode {
    fn dim(&self) -> usize {
        6
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        jansen_rit_drift(x, self, 0.0)
    }

    /// Coupling observable: a rate-scaled sigmoid of the pyramidal
    /// potential mapped into the excitatory input channel,
    /// `h(x)[4] = A a κ S(y1 − y2)`, zero elsewhere. The `A a` factor
    /// makes the diffusively mixed observable act on the receiving
    /// column exactly like external rate input.
    fn coupling_output(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(6);
        out[INPUT_CHANNEL] = self.a_gain
            * self.a
            * self.coupling_scale
            * self.sigmoid(Self::pyramidal_potential(x));
        out
    }

    /// `h` depends on the state only through `y1 − y2`; its gradient has
    /// norm `A a κ S'(v) √2`, so the global constant is
    /// `A a κ (e0 r / 2) √2`.
    fn coupling_lipschitz(&self) -> Option<f64> {
        Some(
            self.a_gain
                * self.a
                * self.coupling_scale
                * (self.e0 * self.r / 2.0)
                * std::f64::consts::SQRT_2,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, dvector};

    /// Newton root-finder oracle with a finite-difference Jacobian,
    /// independent of any integrator.
    fn find_equilibrium(params: &JansenRitNode, start: DVector<f64>) -> DVector<f64> {
        let mut x = start;
        for _ in 0..200 {
            let f = jansen_rit_drift(&x, params, 0.0);
            if f.norm() < 1e-12 {
                break;
            }
            let eps = 1e-6;
            let mut jac = DMatrix::zeros(6, 6);
            for k in 0..6 {
                let mut xp = x.clone();
                xp[k] += eps;
                let fp = jansen_rit_drift(&xp, params, 0.0);
                for i in 0..6 {
                    jac[(i, k)] = (fp[i] - f[i]) / eps;
                }
            }
            let step = jac.lu().solve(&f).expect("singular Jacobian in Newton oracle");
            x -= step;
        }
        x
    }

    #[test]
    fn sigmoid_closed_forms() {
        let p = JansenRitNode::default();
        assert_relative_eq!(p.sigmoid(p.v0), p.e0, max_relative = 1e-15);
        assert!(p.sigmoid(1e6) <= 2.0 * p.e0);
        assert_relative_eq!(p.sigmoid(1e3), 2.0 * p.e0, max_relative = 1e-12);
        let v = p.v0 + 1.0 / p.r;
        assert_relative_eq!(
            p.sigmoid(v),
            2.0 * p.e0 / (1.0 + (-1.0f64).exp()),
            max_relative = 1e-15
        );
    }

    #[test]
    fn sigmoid_is_monotone_and_bounded() {
        let p = JansenRitNode::default();
        let mut prev = p.sigmoid(-60.0);
        let mut v = -60.0;
        while v < 60.0 {
            v += 0.05;
            let s = p.sigmoid(v);
            assert!(s > prev);
            assert!(s > 0.0 && s < 2.0 * p.e0);
            prev = s;
        }
    }

    #[test]
    fn sigmoid_slope_never_exceeds_closed_form_bound() {
        let p = JansenRitNode::default();
        let bound = p.e0 * p.r / 2.0;
        let mut max_slope: f64 = 0.0;
        let dv = 1e-4;
        let mut v = -40.0;
        while v < 40.0 {
            let slope = (p.sigmoid(v + dv) - p.sigmoid(v)).abs() / dv;
            max_slope = max_slope.max(slope);
            v += 0.01;
        }
        assert!(max_slope <= bound + 1e-9);
        // The bound is sharp: attained at v0.
        assert_relative_eq!(max_slope, bound, max_relative = 1e-3);
    }

    #[test]
    fn drift_at_zero_state_matches_hand_evaluation() {
        let p = JansenRitNode {
            p_ext: 0.0,
            ..Default::default()
        };
        let d = jansen_rit_drift(&DVector::zeros(6), &p, 0.0);
        // S(0) evaluated independently from the closed form.
        let s0 = 2.0 * p.e0 / (1.0 + (p.r * p.v0).exp());
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
        assert_relative_eq!(d[3], p.a_gain * p.a * s0, max_relative = 1e-14);
        assert_relative_eq!(d[4], p.a_gain * p.a * p.c2 * s0, max_relative = 1e-14);
        assert_relative_eq!(d[5], p.b_gain * p.b * p.c4 * s0, max_relative = 1e-14);
    }

    #[test]
    fn newton_equilibrium_has_tiny_drift() {
        // Quiescent regime: low external input.
        let p = JansenRitNode {
            p_ext: 60.0,
            ..Default::default()
        };
        let eq = find_equilibrium(&p, DVector::zeros(6));
        let residual = jansen_rit_drift(&eq, &p, 0.0).norm();
        assert!(residual < 1e-8, "equilibrium residual {residual}");
        // Velocities vanish at an equilibrium.
        for k in 3..6 {
            assert!(eq[k].abs() < 1e-9);
        }
    }

    #[test]
    fn drift_is_affine_in_a_gain() {
        let state = dvector![0.1, 6.4, 2.0, -30.0, 55.0, 7.5];
        let base = JansenRitNode::default();
        let gains = [0.0, base.a_gain, 2.0 * base.a_gain];
        let d: Vec<DVector<f64>> = gains
            .iter()
            .map(|&g| jansen_rit_drift(&state, &JansenRitNode { a_gain: g, ..base }, 0.0))
            .collect();
        // Doubling A doubles the A-proportional terms: equal increments.
        for i in 0..6 {
            let inc1 = d[1][i] - d[0][i];
            let inc2 = d[2][i] - d[1][i];
            assert_relative_eq!(inc1, inc2, epsilon = 1e-10);
        }
    }

    #[test]
    fn coupling_input_lands_on_excitatory_channel() {
        let p = JansenRitNode::default();
        let state = dvector![0.3, 2.0, 1.0, 4.0, -2.0, 0.5];
        let d0 = jansen_rit_drift(&state, &p, 0.0);
        let d1 = jansen_rit_drift(&state, &p, 10.0);
        for i in 0..6 {
            if i == INPUT_CHANNEL {
                assert_relative_eq!(d1[i] - d0[i], p.a_gain * p.a * 10.0, max_relative = 1e-12);
            } else {
                assert_eq!(d1[i], d0[i]);
            }
        }
    }

    #[test]
    fn coupling_output_examples() {
        let p = JansenRitNode::default();

        // y1 = y2: the observable sits at the sigmoid value for v = 0.
        let state = dvector![0.0, 3.0, 3.0, 0.0, 0.0, 0.0];
        let h = p.coupling_output(&state);
        let expected = p.a_gain * p.a * p.coupling_scale * p.sigmoid(0.0);
        assert_relative_eq!(h[INPUT_CHANNEL], expected, max_relative = 1e-14);
        for i in 0..6 {
            if i != INPUT_CHANNEL {
                assert_eq!(h[i], 0.0);
            }
        }

        // Identical inputs give identical outputs.
        let z = dvector![1.0, -2.0, 0.5, 9.0, 3.0, -7.0];
        assert_eq!(p.coupling_output(&z), p.coupling_output(&z.clone()));
    }

    #[test]
    fn numeric_lipschitz_estimate_stays_under_closed_form() {
        let p = JansenRitNode::default();
        let bound = p.coupling_lipschitz().unwrap();
        // Max-slope sampling oracle over a state box around the sigmoid
        // midpoint, probing the steepest direction (0,1,-1,0,0,0)/√2.
        let mut worst: f64 = 0.0;
        for i in 0..2000 {
            let v = -20.0 + 0.02 * i as f64;
            let base = dvector![0.0, p.v0 / 2.0 + v / 2.0, p.v0 / 2.0 - v / 2.0, 0.0, 0.0, 0.0];
            let delta = 1e-5;
            let mut shifted = base.clone();
            shifted[PYRAMIDAL_EXC] += delta / 2.0_f64.sqrt();
            shifted[PYRAMIDAL_INH] -= delta / 2.0_f64.sqrt();
            let num = (p.coupling_output(&shifted) - p.coupling_output(&base)).norm();
            worst = worst.max(num / delta);
        }
        assert!(worst > 0.0 && worst.is_finite());
        assert!(worst <= bound * (1.0 + 1e-6));
        // Sharp at the midpoint.
        assert_relative_eq!(worst, bound, max_relative = 1e-4);
    }

    #[test]
    fn validate_rejects_nonpositive_kinetics() {
        let p = JansenRitNode {
            a: -1.0,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().contains('a'));
        assert!(JansenRitNode::default().validate().is_ok());
    }
}
