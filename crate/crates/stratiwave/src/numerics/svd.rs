//! Singular values by one-sided Jacobi rotations.
//!
//! The one-sided method orthogonalizes the columns of a working copy with
//! right rotations. It keeps full relative accuracy on small singular values,
//! which matters here: kernel detection compares against `tol * sigma_max`
//! and eigenvalue-of-the-Gram-matrix approaches blur exactly at that scale.

use nalgebra::DMatrix;

use super::{check_finite, NumericsError, RMat, RVec};

#[derive(Debug, Clone)]
pub struct JacobiSvd {
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors; column k pairs with `singular_values[k]`.
    pub v: RMat,
}

/// Singular values and right singular vectors of a real matrix.
pub fn jacobi_svd(a: &RMat) -> Result<JacobiSvd, NumericsError> {
    check_finite(a, "singular value input")?;
    let m = a.nrows();
    let k = a.ncols();
    if m == 0 || k == 0 {
        return Err(NumericsError::InvalidInput(
            "singular value input must be nonempty".into(),
        ));
    }
    let mut b = a.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    let eps = f64::EPSILON;
    // Columns at rounding scale relative to the whole matrix carry singular
    // values below resolution; rotating two of them against each other only
    // regenerates correlated noise and never meets the relative threshold.
    let floor = (eps * b.norm()).max(f64::MIN_POSITIVE);
    let floor2 = floor * floor;
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..k.saturating_sub(1) {
            for q in p + 1..k {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    app += b[(i, p)] * b[(i, p)];
                    aqq += b[(i, q)] * b[(i, q)];
                    apq += b[(i, p)] * b[(i, q)];
                }
                if app <= floor2 || aqq <= floor2 {
                    continue;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..k {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumericsError::NonConvergence {
            what: "one-sided Jacobi sweep".into(),
            iterations: max_sweeps,
        });
    }
    let mut sigmas: Vec<(f64, usize)> = (0..k)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..m {
                s += b[(i, j)] * b[(i, j)];
            }
            (s.sqrt(), j)
        })
        .collect();
    sigmas.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut vs = DMatrix::<f64>::zeros(k, k);
    for (new_col, &(_, old_col)) in sigmas.iter().enumerate() {
        for i in 0..k {
            vs[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok(JacobiSvd {
        singular_values: sigmas.into_iter().map(|(s, _)| s).collect(),
        v: vs,
    })
}

#[derive(Debug, Clone)]
pub struct Nullspace {
    pub dim: usize,
    /// Orthonormal kernel basis vectors.
    pub basis: Vec<RVec>,
}

/// Kernel of a real matrix: singular values at or below `tol * sigma_max`
/// count as zero.
pub fn nullspace(a: &RMat, tol: f64) -> Result<Nullspace, NumericsError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(NumericsError::InvalidInput(
            "nullspace tolerance must be finite and nonnegative".into(),
        ));
    }
    let svd = jacobi_svd(a)?;
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let cut = tol * smax;
    let k = a.ncols();
    let mut basis = Vec::new();
    for j in 0..k {
        if svd.singular_values[j] <= cut {
            basis.push(svd.v.column(j).clone_owned());
        }
    }
    Ok(Nullspace {
        dim: basis.len(),
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_singular_values() {
        // diag(3, 2, 1) under orthogonal factors keeps its singular values.
        let a = RMat::from_row_slice(3, 3, &[0.0, 0.0, 3.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let svd = jacobi_svd(&a).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
        assert!((svd.singular_values[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_through_right_vectors() {
        let a = RMat::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.0, 1.0, -2.0]);
        let svd = jacobi_svd(&a).unwrap();
        // ||A v_j|| = sigma_j for each right singular vector.
        for j in 0..3 {
            let av = &a * svd.v.column(j);
            assert!((av.norm() - svd.singular_values[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn two_dimensional_kernel_converges() {
        // Two zero rows leave a two-dimensional kernel; the orthogonalized
        // noise columns must deflate instead of cycling past the sweep cap.
        let a = RMat::from_row_slice(
            8,
            8,
            &[
                0.1, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.15, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0, //
                1.0, 1.0, 0.1, 0.0, 0.2, 0.0, 0.0, 0.0, //
                0.9, 1.0, 0.0, 0.15, 0.0, -0.1, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.42, 0.0, 0.0, 0.0, 0.1, 0.0, //
                0.0, 0.0, 0.0, -0.08, 0.0, 0.0, 0.0, 0.15,
            ],
        );
        let ns = nullspace(&a, 1e-10).unwrap();
        assert_eq!(ns.dim, 2);
        for v in &ns.basis {
            assert!((&a * v).norm() <= 1e-12);
        }
    }

    #[test]
    fn rank_deficient_kernel_detected() {
        // Rank 2: third row is the sum of the first two.
        let a = RMat::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0],
        );
        let ns = nullspace(&a, 1e-10).unwrap();
        assert_eq!(ns.dim, 1);
        let v = &ns.basis[0];
        assert!((&a * v).norm() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}
