//! Concrete node dynamics.
//!
//! Three families cover the bundled experiments and the analytic test
//! cases: phase oscillators ([`KuramotoNode`]), six-state cortical-column
//! neural mass models ([`JansenRitNode`]) and linear nodes
//! ([`LinearNode`]) whose certificate constants are known in closed form.

mod jansen_rit;
mod kuramoto;
mod linear;

pub use jansen_rit::{jansen_rit_drift, JansenRitNode, PYRAMIDAL_EXC, PYRAMIDAL_INH};
pub use kuramoto::{pairwise_coupling, KuramotoNode};
pub use linear::LinearNode;
