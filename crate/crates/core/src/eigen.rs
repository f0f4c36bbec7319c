//! Thin wrappers over the dense non-Hermitian eigensolver.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::lattice::Mat4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EigenError {
    #[error("eigensolver did not converge on a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },
}

pub fn to_faer(m: &Mat4) -> Mat<C64> {
    Mat::from_fn(4, 4, |i, j| m[i][j])
}

/// Eigenvalues and right eigenvectors (columns of the returned matrix).
pub fn eig(a: MatRef<'_, C64>) -> Result<(Vec<C64>, Mat<C64>), EigenError> {
    let e = a
        .eigen()
        .map_err(|_| EigenError::NoConvergence { dim: a.nrows() })?;
    let s = e.S().column_vector();
    let values: Vec<C64> = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((values, e.U().to_owned()))
}

pub fn eigvals(a: MatRef<'_, C64>) -> Result<Vec<C64>, EigenError> {
    a.eigenvalues()
        .map_err(|_| EigenError::NoConvergence { dim: a.nrows() })
}

/// Inverse of a 4x4 matrix via partial-pivoting LU.
pub fn inverse4(m: &Mat4) -> Mat4 {
    let inv = to_faer(m).partial_piv_lu().inverse();
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = inv[(i, j)];
        }
    }
    out
}

pub fn det4(m: &Mat4) -> C64 {
    to_faer(m).determinant()
}
