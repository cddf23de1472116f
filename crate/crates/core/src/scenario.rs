//! Scenario files: a TOML description of one experiment.
//!
//! A scenario bundles the model (dynamics kind, per-node parameters,
//! topology, coupling), the reference generator, the controller, initial
//! states, integration settings and optional estimator overrides. The
//! schema is versioned; parsing validates every cross-dimension
//! constraint and fills defaults, so a normalized scenario echoes back
//! byte-stable.
//!
//! ```toml
//! schema_version = 1
//! name = "two-phase"
//!
//! [model]
//! kind = "kuramoto"
//! coupling_mode = "pairwise-sine"
//! n = 2
//! coupling_k = 2.0
//!
//! [model.kuramoto]
//! omega = [0.0, 3.0]
//!
//! [reference]
//! kind = "kuramoto"
//! initial = [0.0]
//!
//! [reference.kuramoto]
//! omega = 1.5
//!
//! [controller]
//! pins = [1, 1]
//! gain = 2.0
//!
//! [initial]
//! states = [[1.0], [-2.0]]
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{JansenRitNode, KuramotoNode, LinearNode};
use crate::graph::{Adjacency, GraphError, Laplacian};
use crate::model::{Controller, CouplingMode, ModelError, NetworkModel, NodeDynamics};
use crate::sampling::StateBox;
use crate::simulate::IntegrationSettings;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("unsupported schema_version {0}, this build reads version {SCHEMA_VERSION}")]
    SchemaVersion(u32),

    #[error("scenario field `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error(transparent)]
    Model(#[from] ModelError),
}

fn field_err(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Field {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Registered node-dynamics families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsKind {
    Kuramoto,
    JansenRit,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub model: ModelSpec,
    pub reference: ReferenceSpec,
    pub controller: ControllerSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub estimation: EstimationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: DynamicsKind,
    #[serde(default = "default_coupling_mode")]
    pub coupling_mode: CouplingMode,
    pub n: usize,
    /// Coupling strength `c` (Laplacian-diffusive mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// All-to-all coupling `K`; the effective strength is `K/n`
    /// (pairwise-sine mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_k: Option<f64>,
    /// Adjacency weights, required in Laplacian-diffusive mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kuramoto: Option<KuramotoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jansen_rit: Option<JansenRitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSpec>,
}

fn default_coupling_mode() -> CouplingMode {
    CouplingMode::LaplacianDiffusive
}

/// Natural frequencies: one shared value or one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Uniform(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuramotoSpec {
    pub omega: OmegaSpec,
}

/// Jansen-Rit parameter table; missing keys take the standard defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JrParams {
    pub a_gain: f64,
    pub b_gain: f64,
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub v0: f64,
    pub e0: f64,
    pub r: f64,
    pub p_ext: f64,
    pub coupling_scale: f64,
}

impl Default for JrParams {
    fn default() -> Self {
        JansenRitNode::default().into()
    }
}

impl From<JansenRitNode> for JrParams {
    fn from(n: JansenRitNode) -> Self {
        Self {
            a_gain: n.a_gain,
            b_gain: n.b_gain,
            a: n.a,
            b: n.b,
            c1: n.c1,
            c2: n.c2,
            c3: n.c3,
            c4: n.c4,
            v0: n.v0,
            e0: n.e0,
            r: n.r,
            p_ext: n.p_ext,
            coupling_scale: n.coupling_scale,
        }
    }
}

impl From<&JrParams> for JansenRitNode {
    fn from(p: &JrParams) -> Self {
        Self {
            a_gain: p.a_gain,
            b_gain: p.b_gain,
            a: p.a,
            b: p.b,
            c1: p.c1,
            c2: p.c2,
            c3: p.c3,
            c4: p.c4,
            v0: p.v0,
            e0: p.e0,
            r: p.r,
            p_ext: p.p_ext,
            coupling_scale: p.coupling_scale,
        }
    }
}

/// Per-node parameter overrides (1-based node index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JrOverride {
    pub node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ext: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JansenRitSpec {
    #[serde(default)]
    pub params: JrParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<JrOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub a_mat: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub kind: DynamicsKind,
    /// Initial reference state (length p).
    pub initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kuramoto: Option<KuramotoRefSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jansen_rit: Option<JrParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuramotoRefSpec {
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    /// Pin mask, one 0/1 entry per node.
    pub pins: Vec<u8>,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Initial node states, `n` rows of length `p`.
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSpec {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSpec {
    pub samples: usize,
    /// Safety inflation applied to sampled estimates.
    pub inflation: f64,
    pub seed: u64,
    /// Optional state-box override (both bounds or neither, length p).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_hi: Option<Vec<f64>>,
}

impl Default for EstimationSpec {
    fn default() -> Self {
        Self {
            samples: 100_000,
            inflation: 1.05,
            seed: 0,
            region_lo: None,
            region_hi: None,
        }
    }
}

impl DynamicsKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DynamicsKind::Kuramoto => "kuramoto",
            DynamicsKind::JansenRit => "jansen-rit",
            DynamicsKind::Linear => "linear",
        }
    }
}

impl Scenario {
    /// Parses, validates and normalizes a scenario document.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        scenario.normalize();
        Ok(scenario)
    }

    /// Serializes the normalized scenario; `parse ∘ to_toml` is the
    /// identity on normalized scenarios.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Expands shorthand (shared omega) so the echoed form is explicit.
    fn normalize(&mut self) {
        if let Some(k) = &mut self.model.kuramoto {
            if let OmegaSpec::Uniform(w) = k.omega {
                k.omega = OmegaSpec::PerNode(vec![w; self.model.n]);
            }
        }
    }

    /// Per-node state dimension implied by the model kind.
    pub fn state_dim(&self) -> usize {
        match self.model.kind {
            DynamicsKind::Kuramoto => 1,
            DynamicsKind::JansenRit => 6,
            DynamicsKind::Linear => self
                .model
                .linear
                .as_ref()
                .map_or(0, |l| l.a_mat.len()),
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion(self.schema_version));
        }
        let n = self.model.n;
        if n == 0 {
            return Err(field_err("model.n", "at least one node is required"));
        }

        // Exactly the parameter table matching the declared kind.
        let tables = [
            ("model.kuramoto", self.model.kuramoto.is_some(), DynamicsKind::Kuramoto),
            ("model.jansen_rit", self.model.jansen_rit.is_some(), DynamicsKind::JansenRit),
            ("model.linear", self.model.linear.is_some(), DynamicsKind::Linear),
        ];
        for (name, present, kind) in tables {
            if present && self.model.kind != kind {
                return Err(field_err(name, format!(
                    "parameter table does not match model.kind = \"{}\"",
                    self.model.kind.as_str()
                )));
            }
            if !present && self.model.kind == kind {
                return Err(field_err(name, "missing parameter table for the declared kind"));
            }
        }

        let p = self.state_dim();
        if p == 0 {
            return Err(field_err("model.linear.a_mat", "drift matrix must be nonempty"));
        }

        match self.model.coupling_mode {
            CouplingMode::PairwiseSine => {
                if p != 1 {
                    return Err(field_err(
                        "model.coupling_mode",
                        format!("pairwise-sine needs scalar node states, kind \"{}\" has p = {p}",
                            self.model.kind.as_str()),
                    ));
                }
                if self.model.coupling_k.is_none() {
                    return Err(field_err("model.coupling_k", "required in pairwise-sine mode"));
                }
                if self.model.c.is_some() {
                    return Err(field_err("model.c", "use coupling_k in pairwise-sine mode"));
                }
                if self.model.adjacency.is_some() {
                    return Err(field_err(
                        "model.adjacency",
                        "pairwise-sine mode is all-to-all; adjacency is not accepted",
                    ));
                }
            }
            CouplingMode::LaplacianDiffusive => {
                if self.model.c.is_none() {
                    return Err(field_err("model.c", "required in laplacian-diffusive mode"));
                }
                if self.model.coupling_k.is_some() {
                    return Err(field_err("model.coupling_k", "use c in laplacian-diffusive mode"));
                }
                let adj = self.model.adjacency.as_ref().ok_or_else(|| {
                    field_err("model.adjacency", "required in laplacian-diffusive mode")
                })?;
                if adj.len() != n || adj.iter().any(|r| r.len() != n) {
                    return Err(field_err(
                        "model.adjacency",
                        format!("must be {n} x {n} to match model.n"),
                    ));
                }
            }
        }

        match self.model.kind {
            DynamicsKind::Kuramoto => {
                if let Some(KuramotoSpec { omega: OmegaSpec::PerNode(v) }) = &self.model.kuramoto {
                    if v.len() != n {
                        return Err(field_err(
                            "model.kuramoto.omega",
                            format!("has {} entries, expected one per node ({n})", v.len()),
                        ));
                    }
                }
            }
            DynamicsKind::JansenRit => {
                let jr = self.model.jansen_rit.as_ref().unwrap();
                JansenRitNode::from(&jr.params)
                    .validate()
                    .map_err(|reason| field_err("model.jansen_rit.params", reason))?;
                for o in &jr.overrides {
                    if o.node == 0 || o.node > n {
                        return Err(field_err(
                            "model.jansen_rit.overrides.node",
                            format!("node index {} out of range 1..={n}", o.node),
                        ));
                    }
                }
            }
            DynamicsKind::Linear => {
                let m = &self.model.linear.as_ref().unwrap().a_mat;
                if m.iter().any(|r| r.len() != m.len()) {
                    return Err(field_err("model.linear.a_mat", "drift matrix must be square"));
                }
            }
        }

        // Reference section.
        let ref_tables = [
            ("reference.kuramoto", self.reference.kuramoto.is_some(), DynamicsKind::Kuramoto),
            ("reference.jansen_rit", self.reference.jansen_rit.is_some(), DynamicsKind::JansenRit),
            ("reference.linear", self.reference.linear.is_some(), DynamicsKind::Linear),
        ];
        for (name, present, kind) in ref_tables {
            if present && self.reference.kind != kind {
                return Err(field_err(name, format!(
                    "parameter table does not match reference.kind = \"{}\"",
                    self.reference.kind.as_str()
                )));
            }
            if !present && self.reference.kind == kind {
                return Err(field_err(name, "missing parameter table for the declared kind"));
            }
        }
        let ref_p = match self.reference.kind {
            DynamicsKind::Kuramoto => 1,
            DynamicsKind::JansenRit => 6,
            DynamicsKind::Linear => self.reference.linear.as_ref().unwrap().a_mat.len(),
        };
        if ref_p != p {
            return Err(field_err(
                "reference.kind",
                format!("reference state dimension {ref_p} does not match model dimension {p}"),
            ));
        }
        if self.reference.initial.len() != p {
            return Err(field_err(
                "reference.initial",
                format!("has {} entries, expected {p}", self.reference.initial.len()),
            ));
        }

        // Controller.
        if self.controller.pins.len() != n {
            return Err(field_err(
                "controller.pins",
                format!("has {} entries, expected one per node ({n})", self.controller.pins.len()),
            ));
        }
        if let Some(bad) = self.controller.pins.iter().find(|&&w| w > 1) {
            return Err(field_err("controller.pins", format!("entries must be 0 or 1, got {bad}")));
        }
        if !(self.controller.gain.is_finite() && self.controller.gain >= 0.0) {
            return Err(field_err(
                "controller.gain",
                format!("must be finite and nonnegative, got {}", self.controller.gain),
            ));
        }

        // Initial states.
        if self.initial.states.len() != n {
            return Err(field_err(
                "initial.states",
                format!("has {} rows, expected one per node ({n})", self.initial.states.len()),
            ));
        }
        for (i, row) in self.initial.states.iter().enumerate() {
            if row.len() != p {
                return Err(field_err(
                    "initial.states",
                    format!("row {} has {} entries, expected {p}", i + 1, row.len()),
                ));
            }
        }

        // Integration.
        let intg = &self.integration;
        if !(intg.dt > 0.0 && intg.dt.is_finite()) {
            return Err(field_err("integration.dt", format!("must be positive, got {}", intg.dt)));
        }
        if !(intg.t_end >= intg.dt && intg.t_end.is_finite()) {
            return Err(field_err(
                "integration.t_end",
                format!("must be at least dt = {}, got {}", intg.dt, intg.t_end),
            ));
        }
        if intg.record_stride == 0 {
            return Err(field_err("integration.record_stride", "must be at least 1"));
        }

        // Estimation.
        let est = &self.estimation;
        if est.samples == 0 {
            return Err(field_err("estimation.samples", "must be at least 1"));
        }
        if !(est.inflation >= 1.0 && est.inflation.is_finite()) {
            return Err(field_err(
                "estimation.inflation",
                format!("must be a finite factor >= 1, got {}", est.inflation),
            ));
        }
        match (&est.region_lo, &est.region_hi) {
            (None, None) => {}
            (Some(lo), Some(hi)) => {
                if lo.len() != p || hi.len() != p {
                    return Err(field_err(
                        "estimation.region_lo/region_hi",
                        format!("bounds must have length p = {p}"),
                    ));
                }
                StateBox::new(
                    DVector::from_vec(lo.clone()),
                    DVector::from_vec(hi.clone()),
                )
                .map_err(|reason| field_err("estimation.region_lo/region_hi", reason))?;
            }
            _ => {
                return Err(field_err(
                    "estimation.region_lo/region_hi",
                    "provide both bounds or neither",
                ));
            }
        }

        Ok(())
    }

    /// Compiles the description into runtime objects.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        self.validate()?;
        let n = self.model.n;
        let p = self.state_dim();

        let nodes: Vec<Arc<dyn NodeDynamics>> = match self.model.kind {
            DynamicsKind::Kuramoto => {
                let omegas: Vec<f64> = match &self.model.kuramoto.as_ref().unwrap().omega {
                    OmegaSpec::Uniform(w) => vec![*w; n],
                    OmegaSpec::PerNode(v) => v.clone(),
                };
                omegas
                    .into_iter()
                    .map(|w| Arc::new(KuramotoNode::new(w)) as Arc<dyn NodeDynamics>)
                    .collect()
            }
            DynamicsKind::JansenRit => {
                let jr = self.model.jansen_rit.as_ref().unwrap();
                let base = JansenRitNode::from(&jr.params);
                (1..=n)
                    .map(|idx| {
                        let mut node = base;
                        for o in jr.overrides.iter().filter(|o| o.node == idx) {
                            if let Some(v) = o.a_gain {
                                node.a_gain = v;
                            }
                            if let Some(v) = o.b_gain {
                                node.b_gain = v;
                            }
                            if let Some(v) = o.p_ext {
                                node.p_ext = v;
                            }
                            if let Some(v) = o.coupling_scale {
                                node.coupling_scale = v;
                            }
                        }
                        Arc::new(node) as Arc<dyn NodeDynamics>
                    })
                    .collect()
            }
            DynamicsKind::Linear => {
                let spec = self.model.linear.as_ref().unwrap();
                let a = DMatrix::from_fn(p, p, |i, j| spec.a_mat[i][j]);
                let node = Arc::new(
                    LinearNode::new(a)
                        .map_err(|reason| field_err("model.linear.a_mat", reason))?,
                );
                (0..n)
                    .map(|_| node.clone() as Arc<dyn NodeDynamics>)
                    .collect()
            }
        };

        let (laplacian, coupling_strength) = match self.model.coupling_mode {
            CouplingMode::LaplacianDiffusive => {
                let adj = Adjacency::from_rows(self.model.adjacency.as_ref().unwrap())?;
                (Laplacian::from_adjacency(&adj), self.model.c.unwrap())
            }
            CouplingMode::PairwiseSine => (
                Laplacian::complete(n),
                self.model.coupling_k.unwrap() / n as f64,
            ),
        };

        let model = NetworkModel::new(nodes, laplacian, coupling_strength, self.model.coupling_mode)?;

        let reference: Arc<dyn NodeDynamics> = match self.reference.kind {
            DynamicsKind::Kuramoto => Arc::new(KuramotoNode::new(
                self.reference.kuramoto.as_ref().unwrap().omega,
            )),
            DynamicsKind::JansenRit => Arc::new(JansenRitNode::from(
                self.reference.jansen_rit.as_ref().unwrap(),
            )),
            DynamicsKind::Linear => {
                let spec = self.reference.linear.as_ref().unwrap();
                let a = DMatrix::from_fn(p, p, |i, j| spec.a_mat[i][j]);
                Arc::new(
                    LinearNode::new(a)
                        .map_err(|reason| field_err("reference.linear.a_mat", reason))?,
                )
            }
        };

        let controller = Controller::new(
            self.controller.pins.iter().map(|&w| w == 1).collect(),
            self.controller.gain,
        )?;

        let initial_states = DMatrix::from_fn(n, p, |i, k| self.initial.states[i][k]);
        let reference_initial = DVector::from_vec(self.reference.initial.clone());

        let integration = IntegrationSettings::new(
            self.integration.dt,
            self.integration.t_end,
            self.integration.record_stride,
        )
        .map_err(|reason| field_err("integration", reason))?;

        let region = match (&self.estimation.region_lo, &self.estimation.region_hi) {
            (Some(lo), Some(hi)) => Some(
                StateBox::new(DVector::from_vec(lo.clone()), DVector::from_vec(hi.clone()))
                    .map_err(|reason| field_err("estimation.region_lo/region_hi", reason))?,
            ),
            _ => None,
        };

        Ok(BuiltScenario {
            name: self.name.clone(),
            model,
            reference,
            reference_initial,
            controller,
            initial_states,
            integration,
            estimation: EstimationConfig {
                samples: self.estimation.samples,
                inflation: self.estimation.inflation,
                seed: self.estimation.seed,
                region,
            },
        })
    }
}

/// Estimator configuration resolved from a scenario.
#[derive(Debug, Clone)]
pub struct EstimationConfig {
    pub samples: usize,
    pub inflation: f64,
    pub seed: u64,
    /// Region override; `None` lets the certifier derive a box from an
    /// uncontrolled pilot run.
    pub region: Option<StateBox>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            inflation: 1.05,
            seed: 0,
            region: None,
        }
    }
}

/// A scenario compiled to runtime objects, ready to simulate or certify.
#[derive(Clone)]
pub struct BuiltScenario {
    pub name: String,
    pub model: NetworkModel,
    pub reference: Arc<dyn NodeDynamics>,
    pub reference_initial: DVector<f64>,
    pub controller: Controller,
    pub initial_states: DMatrix<f64>,
    pub integration: IntegrationSettings,
    pub estimation: EstimationConfig,
}

impl BuiltScenario {
    /// Same scenario with a different feedback gain.
    pub fn with_gain(&self, gain: f64) -> Result<Self, ModelError> {
        let mut out = self.clone();
        out.controller = self.controller.with_gain(gain)?;
        Ok(out)
    }
}

impl std::fmt::Debug for BuiltScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltScenario")
            .field("name", &self.name)
            .field("model", &self.model)
            .field("controller", &self.controller)
            .field("integration", &self.integration)
            .finish()
    }
}
