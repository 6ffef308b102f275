//! Small dense real linear algebra.
//!
//! Every matrix in this crate is at most a handful of rows, so the types here
//! are thin validated wrappers over `nalgebra`'s dynamic storage.

use std::ops::Deref;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used when a routine requires a symmetric argument.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A finite, square, non-empty real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

/// A finite real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct RealVector(DVector<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "rows of a {n}-row matrix must all have length {n}"
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }
}

impl Deref for SquareMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl RealVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector has non-finite entries"));
        }
        Ok(Self(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }
}

impl Deref for RealVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// `e^{M t}`. Returns the identity exactly when `M t` vanishes.
pub fn mat_exp(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !t.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix exponential of non-finite input"));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::invalid("matrix exponential of a non-square matrix"));
    }
    let n = m.nrows();
    let scaled = m * t;
    if scaled.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::identity(n, n));
    }
    Ok(scaled.exp())
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = max_abs(m);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn frobenius_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("inverse of an empty or non-finite matrix"));
    }
    if !is_symmetric(m, SYMMETRY_TOL) {
        return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
    }
    let chol = Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::NotPositiveDefinite("non-positive pivot in Cholesky factorization".into()))?;
    let l = chol.l_dirty();
    if (0..m.nrows()).any(|i| !(l[(i, i)] > 0.0)) {
        return Err(Error::NotPositiveDefinite(
            "non-positive pivot in Cholesky factorization".into(),
        ));
    }
    Ok(symmetrize(&chol.inverse()))
}

/// Smallest eigenvalue of a symmetric matrix, i.e. the minimum of `xᵀMx`
/// over unit vectors.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("eigenvalue of an empty or non-finite matrix"));
    }
    if !is_symmetric(m, SYMMETRY_TOL) {
        return Err(Error::invalid("minimum eigenvalue requires a symmetric matrix"));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Determinant magnitude test used for non-degeneracy checks, scaled by the
/// Frobenius norm so that the threshold is dimensionless.
pub fn is_nondegenerate(m: &DMatrix<f64>) -> bool {
    let n = m.nrows() as i32;
    let scale = frobenius_norm(m).max(f64::MIN_POSITIVE).powi(n);
    m.determinant().abs() > 1e-12 * scale
}
