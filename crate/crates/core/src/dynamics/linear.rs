//! Linear node `f(x) = A x`, `h = identity`.
//!
//! Every certificate constant is analytic here: the quadratic-condition
//! constant is the top eigenvalue of the symmetric part `(A + Aᵀ)/2` and
//! the coupling Lipschitz constant is 1. That makes this node the
//! ground-truth oracle for the estimators and the certificate.

use nalgebra::{DMatrix, DVector};

use crate::model::NodeDynamics;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearNode {
    a_mat: DMatrix<f64>,
    sym_top_eig: f64,
}

impl LinearNode {
    pub fn new(a_mat: DMatrix<f64>) -> Result<Self, String> {
        if a_mat.nrows() != a_mat.ncols() || a_mat.is_empty() {
            return Err(format!(
                "linear drift matrix must be square and nonempty, got {} x {}",
                a_mat.nrows(),
                a_mat.ncols()
            ));
        }
        if a_mat.iter().any(|v| !v.is_finite()) {
            return Err("linear drift matrix has non-finite entries".to_string());
        }
        let sym = (&a_mat + a_mat.transpose()) * 0.5;
        let sym_top_eig = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { a_mat, sym_top_eig })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    /// `λ_max((A + Aᵀ)/2)`.
    pub fn symmetric_top_eigenvalue(&self) -> f64 {
        self.sym_top_eig
    }
}

impl NodeDynamics for LinearNode {
    fn dim(&self) -> usize {
        self.a_mat.nrows()
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a_mat * x
    }

    fn coupling_output(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    /// `zᵀ(A(z+x) − Ax) = zᵀAz ≤ λ_max((A+Aᵀ)/2) zᵀz`, tight on the top
    /// eigenvector.
    fn quadratic_bound(&self) -> Option<f64> {
        Some(self.sym_top_eig)
    }

    fn coupling_lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
}
