//! Graph Laplacians and the spectral quantities the certificate needs.
//!
//! Coupling topology enters the model through a Laplacian `L = D − A`
//! built from a nonnegative adjacency matrix with zero diagonal. The
//! certificate only consumes `‖L ⊗ I_p‖₂`, which equals `‖L‖₂` because a
//! Kronecker product with an identity preserves singular values.
//!
//! Adjacency matrices may be asymmetric (directed weights); the spectral
//! norm falls back from the symmetric eigensolver to singular values in
//! that case.

use nalgebra::DMatrix;
use thiserror::Error;

/// Absolute tolerance for the zero-row-sum invariant of a constructed
/// Laplacian. Inputs are exact user data, not measurements.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("adjacency matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("adjacency matrix is empty; at least one node is required")]
    Empty,

    #[error("negative weight {value} at adjacency entry ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("nonzero diagonal entry {value} at adjacency position ({idx}, {idx})")]
    NonzeroDiagonal { idx: usize, value: f64 },

    #[error("non-finite weight at adjacency entry ({row}, {col})")]
    NonFiniteWeight { row: usize, col: usize },

    #[error("Kronecker identity dimension must be at least 1")]
    ZeroKronDimension,
}

/// Validated nonnegative weighted adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    weights: DMatrix<f64>,
}

impl Adjacency {
    /// Validates and wraps a weight matrix.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self, GraphError> {
        if weights.nrows() != weights.ncols() {
            return Err(GraphError::NotSquare {
                rows: weights.nrows(),
                cols: weights.ncols(),
            });
        }
        if weights.nrows() == 0 {
            return Err(GraphError::Empty);
        }
        for i in 0..weights.nrows() {
            for j in 0..weights.ncols() {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(GraphError::NonFiniteWeight { row: i, col: j });
                }
                if i == j && w != 0.0 {
                    return Err(GraphError::NonzeroDiagonal { idx: i, value: w });
                }
                if w < 0.0 {
                    return Err(GraphError::NegativeWeight {
                        row: i,
                        col: j,
                        value: w,
                    });
                }
            }
        }
        Ok(Self { weights })
    }

    /// Builds the validated adjacency from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) || n != m {
            return Err(GraphError::NotSquare { rows: n, cols: m });
        }
        let weights = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_weights(weights)
    }

    /// Complete graph on `n` nodes with unit weights.
    pub fn complete(n: usize) -> Self {
        let weights = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        Self { weights }
    }

    /// Path graph 1—2—…—n with unit weights.
    pub fn path(n: usize) -> Self {
        let weights = DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        Self { weights }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

/// Graph Laplacian `L = D − A` with zero row sums, nonpositive
/// off-diagonal and nonnegative diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    entries: DMatrix<f64>,
}

impl Laplacian {
    /// `L = diag(row sums of A) − A`.
    pub fn from_adjacency(adj: &Adjacency) -> Self {
        let n = adj.n();
        let a = adj.weights();
        let mut entries = -a.clone();
        for i in 0..n {
            entries[(i, i)] = a.row(i).sum();
        }
        let lap = Self { entries };
        debug_assert!(lap.max_abs_row_sum() <= ROW_SUM_TOL * lap.scale().max(1.0));
        lap
    }

    /// Laplacian of the complete graph on `n` nodes (spectrum `{0, n}`).
    pub fn complete(n: usize) -> Self {
        Self::from_adjacency(&Adjacency::complete(n))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Largest absolute row sum; zero up to rounding for any valid Laplacian.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n())
            .map(|i| self.entries.row(i).sum().abs())
            .fold(0.0, f64::max)
    }

    fn scale(&self) -> f64 {
        self.entries.amax()
    }

    /// `‖L‖₂`, the largest singular value. Symmetric matrices take the
    /// eigenvalue route; asymmetric ones fall back to the SVD.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    /// `‖L ⊗ I_p‖₂`. The Kronecker product with an identity leaves the
    /// singular values untouched, so this is `‖L‖₂`; tests cross-check
    /// against the explicitly assembled `np × np` matrix.
    pub fn kron_identity_norm(&self, p: usize) -> Result<f64, GraphError> {
        if p == 0 {
            return Err(GraphError::ZeroKronDimension);
        }
        Ok(self.spectral_norm())
    }
}

/// Spectral norm `‖M‖₂` of a dense square matrix.
///
/// Symmetric inputs (within `1e-12` relative) use the symmetric
/// eigensolver; anything else goes through the SVD.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut symmetric = true;
    'outer: for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                symmetric = false;
                break 'outer;
            }
        }
    }
    if symmetric {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max)
    } else {
        m.clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    /// Independent oracle: power iteration on MᵀM gives σ_max².
    fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
        let gram = m.transpose() * m;
        let n = gram.nrows();
        let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut sigma2 = 0.0;
        for _ in 0..10_000 {
            let w = &gram * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / norm;
            sigma2 = norm;
        }
        sigma2.sqrt()
    }

    fn kron_with_identity(m: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
        m.kronecker(&DMatrix::<f64>::identity(p, p))
    }

    #[test]
    fn two_node_path_laplacian() {
        let lap = Laplacian::from_adjacency(&Adjacency::path(2));
        assert_eq!(lap.matrix(), &dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn complete_k3_laplacian() {
        let lap = Laplacian::complete(3);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 } else { -1.0 };
                assert_eq!(lap.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn weighted_two_node_edge() {
        let adj = Adjacency::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let lap = Laplacian::from_adjacency(&adj);
        assert_eq!(lap.matrix(), &dmatrix![3.0, -3.0; -3.0, 3.0]);
    }

    #[test]
    fn adjacency_rejects_bad_input() {
        let err = Adjacency::from_rows(&[vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, GraphError::NotSquare { rows: 1, cols: 2 }));

        let err = Adjacency::from_rows(&[vec![0.0, -2.0], vec![1.0, 0.0]]).unwrap_err();
        match err {
            GraphError::NegativeWeight { row, col, value } => {
                assert_eq!((row, col), (0, 1));
                assert_eq!(value, -2.0);
            }
            other => panic!("unexpected error: {other}"),
        }

        let err = Adjacency::from_rows(&[vec![0.5, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, GraphError::NonzeroDiagonal { idx: 0, .. }));

        assert!(matches!(
            Adjacency::from_weights(DMatrix::zeros(0, 0)).unwrap_err(),
            GraphError::Empty
        ));
    }

    #[test]
    fn path_norm_is_two() {
        let lap = Laplacian::from_adjacency(&Adjacency::path(2));
        assert_relative_eq!(lap.spectral_norm(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn complete_graph_norm_matches_eigensolver_oracle() {
        for n in [3usize, 5, 10] {
            let lap = Laplacian::complete(n);
            // Dense eigensolver oracle on the symmetric Laplacian.
            let oracle = lap
                .matrix()
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|l| l.abs())
                .fold(0.0, f64::max);
            assert_relative_eq!(lap.spectral_norm(), n as f64, max_relative = 1e-10);
            assert_relative_eq!(lap.spectral_norm(), oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn asymmetric_norm_matches_power_iteration_oracle() {
        // Directed weights give an asymmetric Laplacian with zero row sums.
        let adj = Adjacency::from_rows(&[
            vec![0.0, 2.0, 0.5],
            vec![0.0, 0.0, 1.0],
            vec![3.0, 0.25, 0.0],
        ])
        .unwrap();
        let lap = Laplacian::from_adjacency(&adj);
        assert!(lap.max_abs_row_sum() <= ROW_SUM_TOL);
        let oracle = power_iteration_norm(lap.matrix());
        assert_relative_eq!(lap.spectral_norm(), oracle, max_relative = 1e-9);
    }

    #[test]
    fn kron_identity_norm_cases() {
        let path2 = Laplacian::from_adjacency(&Adjacency::path(2));
        assert_relative_eq!(path2.kron_identity_norm(1).unwrap(), 2.0);

        // Explicit 12x12 Kronecker oracle.
        let explicit = spectral_norm(&kron_with_identity(path2.matrix(), 6));
        assert_relative_eq!(
            path2.kron_identity_norm(6).unwrap(),
            explicit,
            max_relative = 1e-10
        );

        let k10 = Laplacian::complete(10);
        assert_relative_eq!(k10.kron_identity_norm(1).unwrap(), 10.0, max_relative = 1e-10);

        assert!(matches!(
            path2.kron_identity_norm(0),
            Err(GraphError::ZeroKronDimension)
        ));
    }

    #[test]
    fn laplacian_annihilates_ones() {
        let cases = vec![
            Laplacian::from_adjacency(&Adjacency::path(7)),
            Laplacian::complete(9),
            Laplacian::from_adjacency(
                &Adjacency::from_rows(&[
                    vec![0.0, 0.3, 0.0, 7.0],
                    vec![1.2, 0.0, 0.0, 0.1],
                    vec![0.0, 5.5, 0.0, 2.0],
                    vec![0.4, 0.0, 9.0, 0.0],
                ])
                .unwrap(),
            ),
        ];
        for lap in cases {
            let ones = nalgebra::DVector::from_element(lap.n(), 1.0);
            assert!((lap.matrix() * ones).amax() <= ROW_SUM_TOL);
        }
    }

    proptest! {
        #[test]
        fn kron_norm_equals_plain_norm_for_all_p(
            weights in proptest::collection::vec(0.0f64..10.0, 16),
            p in 1usize..=8,
        ) {
            let mut m = DMatrix::from_fn(4, 4, |i, j| weights[4 * i + j]);
            for i in 0..4 {
                m[(i, i)] = 0.0;
            }
            let lap = Laplacian::from_adjacency(&Adjacency::from_weights(m).unwrap());
            let direct = lap.kron_identity_norm(p).unwrap();
            let explicit = spectral_norm(&kron_with_identity(lap.matrix(), p));
            if explicit > 0.0 {
                prop_assert!((direct - explicit).abs() <= 1e-10 * explicit.max(1.0));
            } else {
                prop_assert!(direct.abs() <= 1e-12);
            }
        }

        #[test]
        fn spectral_norm_is_homogeneous(
            weights in proptest::collection::vec(0.0f64..5.0, 9),
            alpha in -10.0f64..10.0,
        ) {
            let mut m = DMatrix::from_fn(3, 3, |i, j| weights[3 * i + j]);
            for i in 0..3 {
                m[(i, i)] = 0.0;
            }
            let lap = Laplacian::from_adjacency(&Adjacency::from_weights(m).unwrap());
            let base = lap.spectral_norm();
            let scaled = spectral_norm(&(lap.matrix() * alpha));
            prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
