//! Abstract network-coupled system and the error-feedback pinning law.
//!
//! A network couples `n` nodes, each evolving a `p`-dimensional state
//! through its own drift `f` and exposing a coupling observable `h`:
//!
//! ```text
//! ẋᵢ = f(xᵢ) − c Σⱼ Lᵢⱼ h(xⱼ) + uᵢ        (Laplacian-diffusive)
//! θ̇ᵢ = f(θᵢ) + c Σⱼ sin(θⱼ − θᵢ) + uᵢ     (pairwise-sine, p = 1)
//! ```
//!
//! The pairwise-sine mode covers all-to-all phase models whose coupling
//! `(K/N) Σ sin(θⱼ − θᵢ)` is not of Laplacian-diffusive form; it is
//! mapped onto the certificate with `c = K/N`, a complete-graph
//! Laplacian and `θ_h = 1`.
//!
//! The controller pins a subset of nodes (`wᵢ = 1`) with a shared scalar
//! gain: `uᵢ = −wᵢ Φ (xᵢ − xᵣ)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::Laplacian;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model has {nodes} node dynamics but the Laplacian is {lap} x {lap}")]
    NodeCountMismatch { nodes: usize, lap: usize },

    #[error("node {idx} has state dimension {got}, expected {expected}")]
    StateDimMismatch {
        idx: usize,
        got: usize,
        expected: usize,
    },

    #[error("pairwise-sine coupling requires scalar node states (p = 1), got p = {p}")]
    PairwiseNeedsScalarState { p: usize },

    #[error("coupling strength must be finite, got {value}")]
    NonFiniteCoupling { value: f64 },

    #[error("{what} has shape {rows} x {cols}, expected {exp_rows} x {exp_cols}")]
    ShapeMismatch {
        what: &'static str,
        rows: usize,
        cols: usize,
        exp_rows: usize,
        exp_cols: usize,
    },

    #[error("pin mask has length {got}, expected one entry per node ({expected})")]
    PinMaskLength { got: usize, expected: usize },

    #[error("controller gain must be finite and nonnegative, got {value}")]
    InvalidGain { value: f64 },
}

/// Node-level dynamics: drift `f` and coupling observable `h`, both
/// deterministic maps `ℝᵖ → ℝᵖ`.
pub trait NodeDynamics: Send + Sync {
    /// State dimension `p`.
    fn dim(&self) -> usize;

    /// Drift `f(x)`.
    fn drift(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Coupling observable `h(x)`.
    fn coupling_output(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Exact quadratic-condition constant `θ_f` when one is known in
    /// closed form: the least `θ` with `zᵀ(f(z+x) − f(x)) ≤ θ zᵀz` for
    /// all `z`, `x`. `None` means the constant must be sampled.
    fn quadratic_bound(&self) -> Option<f64> {
        None
    }

    /// Exact global Lipschitz constant of `h`, when known in closed form.
    fn coupling_lipschitz(&self) -> Option<f64> {
        None
    }
}

/// How node states interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// `−c Σⱼ Lᵢⱼ h(xⱼ)` added to every node drift.
    LaplacianDiffusive,
    /// `c Σⱼ sin(xⱼ − xᵢ)` for scalar phase states.
    PairwiseSine,
}

/// The coupled network: per-node dynamics, topology and coupling strength.
///
/// Immutable after construction; shared read-only across concurrent runs.
#[derive(Clone)]
pub struct NetworkModel {
    nodes: Vec<Arc<dyn NodeDynamics>>,
    laplacian: Laplacian,
    coupling_strength: f64,
    coupling_mode: CouplingMode,
    state_dim: usize,
}

impl NetworkModel {
    pub fn new(
        nodes: Vec<Arc<dyn NodeDynamics>>,
        laplacian: Laplacian,
        coupling_strength: f64,
        coupling_mode: CouplingMode,
    ) -> Result<Self, ModelError> {
        if nodes.len() != laplacian.n() {
            return Err(ModelError::NodeCountMismatch {
                nodes: nodes.len(),
                lap: laplacian.n(),
            });
        }
        let state_dim = nodes[0].dim();
        for (idx, node) in nodes.iter().enumerate() {
            if node.dim() != state_dim {
                return Err(ModelError::StateDimMismatch {
                    idx,
                    got: node.dim(),
                    expected: state_dim,
                });
            }
        }
        if coupling_mode == CouplingMode::PairwiseSine && state_dim != 1 {
            return Err(ModelError::PairwiseNeedsScalarState { p: state_dim });
        }
        if !coupling_strength.is_finite() {
            return Err(ModelError::NonFiniteCoupling {
                value: coupling_strength,
            });
        }
        Ok(Self {
            nodes,
            laplacian,
            coupling_strength,
            coupling_mode,
            state_dim,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Per-node state dimension `p`.
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn node(&self, i: usize) -> &dyn NodeDynamics {
        self.nodes[i].as_ref()
    }

    pub fn nodes(&self) -> &[Arc<dyn NodeDynamics>] {
        &self.nodes
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn coupling_strength(&self) -> f64 {
        self.coupling_strength
    }

    pub fn coupling_mode(&self) -> CouplingMode {
        self.coupling_mode
    }

    /// The Laplacian the certificate uses: the model's own in diffusive
    /// mode, the complete graph in pairwise-sine mode.
    pub fn certificate_laplacian(&self) -> Laplacian {
        match self.coupling_mode {
            CouplingMode::LaplacianDiffusive => self.laplacian.clone(),
            CouplingMode::PairwiseSine => Laplacian::complete(self.n()),
        }
    }

    fn check_shape(
        &self,
        what: &'static str,
        m: &DMatrix<f64>,
    ) -> Result<(), ModelError> {
        if m.nrows() != self.n() || m.ncols() != self.state_dim {
            return Err(ModelError::ShapeMismatch {
                what,
                rows: m.nrows(),
                cols: m.ncols(),
                exp_rows: self.n(),
                exp_cols: self.state_dim,
            });
        }
        Ok(())
    }

    /// Right-hand side of the controlled network: row `i` holds
    /// `f(xᵢ) + couplingᵢ + uᵢ`.
    pub fn network_drift(
        &self,
        states: &DMatrix<f64>,
        inputs: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, ModelError> {
        self.check_shape("states", states)?;
        self.check_shape("inputs", inputs)?;
        Ok(self.network_drift_unchecked(states, inputs))
    }

    /// Shape-unchecked drift used on the integrator hot path after the
    /// scenario has been validated once.
    pub(crate) fn network_drift_unchecked(
        &self,
        states: &DMatrix<f64>,
        inputs: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let n = self.n();
        let p = self.state_dim;
        let mut out = DMatrix::zeros(n, p);
        match self.coupling_mode {
            CouplingMode::LaplacianDiffusive => {
                // Evaluate h once per node, then mix through the Laplacian.
                let mut h_all = DMatrix::zeros(n, p);
                for j in 0..n {
                    let xj = states.row(j).transpose();
                    h_all.row_mut(j).copy_from(&self.nodes[j].coupling_output(&xj).transpose());
                }
                let mix = self.laplacian.matrix() * &h_all;
                for i in 0..n {
                    let xi = states.row(i).transpose();
                    let fi = self.nodes[i].drift(&xi);
                    for k in 0..p {
                        out[(i, k)] =
                            fi[k] - self.coupling_strength * mix[(i, k)] + inputs[(i, k)];
                    }
                }
            }
            CouplingMode::PairwiseSine => {
                for i in 0..n {
                    let xi = states[(i, 0)];
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += (states[(j, 0)] - xi).sin();
                    }
                    let fi = self.nodes[i].drift(&DVector::from_element(1, xi));
                    out[(i, 0)] = fi[0] + self.coupling_strength * acc + inputs[(i, 0)];
                }
            }
        }
        out
    }

    /// Right-hand side of the reference system.
    ///
    /// The coupling term is evaluated literally with every node sitting at
    /// `x_r`; it cancels for any zero-row-sum Laplacian (and identically
    /// in pairwise-sine mode), leaving `f(x_r)`.
    pub fn reference_drift(
        &self,
        reference: &dyn NodeDynamics,
        x_r: &DVector<f64>,
    ) -> Result<DVector<f64>, ModelError> {
        if x_r.len() != self.state_dim || reference.dim() != self.state_dim {
            return Err(ModelError::ShapeMismatch {
                what: "reference state",
                rows: x_r.len(),
                cols: 1,
                exp_rows: self.state_dim,
                exp_cols: 1,
            });
        }
        Ok(self.reference_drift_unchecked(reference, x_r))
    }

    pub(crate) fn reference_drift_unchecked(
        &self,
        reference: &dyn NodeDynamics,
        x_r: &DVector<f64>,
    ) -> DVector<f64> {
        let mut out = reference.drift(x_r);
        match self.coupling_mode {
            CouplingMode::LaplacianDiffusive => {
                let h_r = reference.coupling_output(x_r);
                let row_sum: f64 = self.laplacian.matrix().row(0).sum();
                out -= h_r * (self.coupling_strength * row_sum);
            }
            CouplingMode::PairwiseSine => {
                // Σⱼ sin(x_r − x_r) = 0, evaluated literally.
                out[0] += self.coupling_strength * (self.n() as f64) * 0.0f64.sin();
            }
        }
        out
    }
}

impl std::fmt::Debug for NetworkModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NetworkModel")
            .field("n", &self.n())
            .field("state_dim", &self.state_dim)
            .field("coupling_strength", &self.coupling_strength)
            .field("coupling_mode", &self.coupling_mode)
            .finish()
    }
}

/// Pin mask and shared feedback gain implementing `uᵢ = −wᵢ Φ eᵢ`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Controller {
    pins: Vec<bool>,
    gain: f64,
}

impl Controller {
    pub fn new(pins: Vec<bool>, gain: f64) -> Result<Self, ModelError> {
        if !gain.is_finite() || gain < 0.0 {
            return Err(ModelError::InvalidGain { value: gain });
        }
        Ok(Self { pins, gain })
    }

    /// All of `n` nodes pinned.
    pub fn all_pinned(n: usize, gain: f64) -> Result<Self, ModelError> {
        Self::new(vec![true; n], gain)
    }

    pub fn pins(&self) -> &[bool] {
        &self.pins
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn with_gain(&self, gain: f64) -> Result<Self, ModelError> {
        Self::new(self.pins.clone(), gain)
    }

    pub fn n(&self) -> usize {
        self.pins.len()
    }
}

/// Tracking error matrix: row `i` is `xᵢ − x_r`.
pub fn error_state(states: &DMatrix<f64>, x_r: &DVector<f64>) -> DMatrix<f64> {
    let mut e = states.clone();
    for i in 0..states.nrows() {
        for k in 0..states.ncols() {
            e[(i, k)] -= x_r[k];
        }
    }
    e
}

/// Control inputs `uᵢ = −wᵢ Φ eᵢ`; unpinned rows are exactly zero.
pub fn control_input(ctrl: &Controller, errors: &DMatrix<f64>) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(errors.nrows(), errors.ncols());
    for i in 0..errors.nrows() {
        if ctrl.pins[i] {
            for k in 0..errors.ncols() {
                u[(i, k)] = -ctrl.gain * errors[(i, k)];
            }
        }
    }
    u
}
