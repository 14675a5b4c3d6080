//! Complex LU factorization and power-iteration operator norms.

use num_complex::Complex64;

use super::{CMat, CVec, NumericsError};

/// LU factorization with partial pivoting of a square complex matrix.
pub struct CluFactor {
    lu: CMat,
    piv: Vec<usize>,
}

impl CluFactor {
    pub fn new(a: &CMat) -> Result<Self, NumericsError> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pk = k;
            let mut pmax = lu[(k, k)].norm();
            for i in k + 1..n {
                let m = lu[(i, k)].norm();
                if m > pmax {
                    pmax = m;
                    pk = i;
                }
            }
            if pmax == 0.0 {
                return Err(NumericsError::Singular(
                    "complex LU hit a zero pivot".into(),
                ));
            }
            if pk != k {
                lu.swap_rows(pk, k);
                piv.swap(pk, k);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let upd = lu[(k, j)] * f;
                    lu[(i, j)] -= upd;
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        let n = self.lu.nrows();
        let mut x = CVec::from_element(n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            for j in 0..i {
                let upd = self.lu[(i, j)] * x[j];
                x[i] -= upd;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let upd = self.lu[(i, j)] * x[j];
                x[i] -= upd;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMat {
        let n = self.lu.nrows();
        let mut inv = CMat::from_element(n, n, Complex64::new(0.0, 0.0));
        for col in 0..n {
            let mut e = CVec::from_element(n, Complex64::new(0.0, 0.0));
            e[col] = Complex64::new(1.0, 0.0);
            let x = self.solve(&e);
            for row in 0..n {
                inv[(row, col)] = x[row];
            }
        }
        inv
    }
}

fn start_vector(n: usize) -> CVec {
    // Deterministic start with no special symmetry.
    CVec::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.1 * ((i % 7) as f64), 0.05 * ((i % 3) as f64))
    })
}

/// Spectral norm (largest singular value) by power iteration on `A^H A`.
pub fn norm2_complex(a: &CMat) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let ah = a.adjoint();
    let mut v = start_vector(n);
    let mut sigma = 0.0f64;
    for _ in 0..500 {
        let av = a * &v;
        let mut w = &ah * &av;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        w /= Complex64::new(wn, 0.0);
        let new_sigma = (a * &w).norm();
        v = w;
        if (new_sigma - sigma).abs() <= 1e-13 * new_sigma.max(1e-300) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Two-norm condition number; infinity when the matrix is singular.
pub fn cond2_complex(a: &CMat) -> f64 {
    match CluFactor::new(a) {
        Err(_) => f64::INFINITY,
        Ok(lu) => {
            let inv = lu.inverse();
            let ninv = norm2_complex(&inv);
            norm2_complex(a) * ninv
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmat(rows: usize, cols: usize, data: &[(f64, f64)]) -> CMat {
        CMat::from_fn(rows, cols, |i, j| {
            let (re, im) = data[i * cols + j];
            Complex64::new(re, im)
        })
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = cmat(
            2,
            2,
            &[(1.0, 1.0), (2.0, 0.0), (0.0, -1.0), (1.0, 0.5)],
        );
        let b = CVec::from_fn(2, |i, _| Complex64::new(i as f64 + 1.0, -0.5));
        let lu = CluFactor::new(&a).unwrap();
        let x = lu.solve(&b);
        let r = &a * &x - &b;
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = cmat(
            3,
            3,
            &[
                (2.0, 0.0),
                (1.0, -1.0),
                (0.0, 0.0),
                (0.5, 0.5),
                (3.0, 0.0),
                (1.0, 0.0),
                (0.0, 1.0),
                (0.0, 0.0),
                (1.5, -0.5),
            ],
        );
        let inv = CluFactor::new(&a).unwrap().inverse();
        let prod = &a * &inv;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_of_scaled_unitary_is_the_scale() {
        // 2x2 rotation times 3 has spectral norm 3.
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let a = cmat(
            2,
            2,
            &[(3.0 * c, 0.0), (-3.0 * s, 0.0), (3.0 * s, 0.0), (3.0 * c, 0.0)],
        );
        assert!((norm2_complex(&a) - 3.0).abs() < 1e-10);
        assert!((cond2_complex(&a) - 1.0).abs() < 1e-8);
    }
}
