//! Dense linear-algebra kernels the analysis modules are built on.
//!
//! Everything here is self-contained: the eigensolver is a balanced
//! Hessenberg reduction followed by Francis double-shift QR with eigenvectors
//! recovered from the real Schur form, the root finder runs the same QR on a
//! companion matrix, singular values come from one-sided Jacobi, and the
//! matrix exponential uses Pade order 13 with scaling and squaring. Only the
//! containers and elementary operations (products, LU determinants) come from
//! `nalgebra`.

mod eig;
mod expm;
mod linalg;
mod poly;
mod svd;

pub use eig::{eig_dense, eigenvalues, spectral_radius, EigenDecomposition};
pub use expm::{expm, matrix_exp_growth, GrowthCurve};
pub use linalg::{cond2_complex, norm2_complex, CluFactor};
pub use poly::{charpoly_coeffs, poly_eval, poly_roots};
pub use svd::{jacobi_svd, nullspace, JacobiSvd, Nullspace};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest matrix order the dense eigensolver accepts.
pub const MAX_EIG_ORDER: usize = 512;
/// Largest polynomial degree the companion-matrix root finder accepts.
pub const MAX_POLY_DEGREE: usize = 64;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("{what} of size {got} exceeds the supported maximum {max}")]
    TooLarge { what: String, got: usize, max: usize },
}

pub(crate) fn check_finite(a: &RMat, what: &str) -> Result<(), NumericsError> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::InvalidInput(format!(
            "{what} contains a non-finite entry"
        )))
    }
}

/// Determinant through an LU factorization with partial pivoting.
pub fn determinant(a: &RMat) -> f64 {
    assert_eq!(a.nrows(), a.ncols(), "determinant needs a square matrix");
    a.clone().lu().determinant()
}

/// Determinants of the leading principal k-by-k blocks, k = 1..order.
pub fn leading_principal_minors(a: &RMat) -> Vec<f64> {
    assert_eq!(a.nrows(), a.ncols(), "minors need a square matrix");
    (1..=a.nrows())
        .map(|k| determinant(&a.view((0, 0), (k, k)).clone_owned()))
        .collect()
}
