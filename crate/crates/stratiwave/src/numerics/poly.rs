//! Polynomial roots through companion-matrix eigenvalues.

use num_complex::Complex64;

use super::eig::eigenvalues;
use super::{NumericsError, RMat, MAX_POLY_DEGREE};

/// Evaluate a real-coefficient polynomial (ascending coefficients) at a
/// complex point by Horner's rule.
pub fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn poly_eval_deriv(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

/// All complex roots of a real polynomial with nonzero leading coefficient.
///
/// Coefficients are ascending: `coeffs[k]` multiplies `x^k`. Roots are the
/// eigenvalues of the balanced monic companion matrix, each polished by a
/// guarded Newton step, sorted by real then imaginary part.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, NumericsError> {
    if coeffs.is_empty() {
        return Err(NumericsError::InvalidInput(
            "polynomial needs at least one coefficient".into(),
        ));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(NumericsError::InvalidInput(
            "polynomial coefficients must be finite".into(),
        ));
    }
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if lead == 0.0 {
        return Err(NumericsError::InvalidInput(
            "leading polynomial coefficient must be nonzero".into(),
        ));
    }
    if degree > MAX_POLY_DEGREE {
        return Err(NumericsError::TooLarge {
            what: "polynomial degree".into(),
            got: degree,
            max: MAX_POLY_DEGREE,
        });
    }
    if degree == 0 {
        return Ok(Vec::new());
    }

    let mut companion = RMat::zeros(degree, degree);
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
        if i + 1 < degree {
            companion[(i + 1, i)] = 1.0;
        }
    }
    let mut roots = eigenvalues(&companion)?;

    for z in roots.iter_mut() {
        let mut best = *z;
        let mut fbest = poly_eval(coeffs, best).norm();
        for _ in 0..2 {
            let f = poly_eval(coeffs, best);
            let fp = poly_eval_deriv(coeffs, best);
            if fp.norm() == 0.0 {
                break;
            }
            let cand = best - f / fp;
            let fcand = poly_eval(coeffs, cand).norm();
            if fcand < fbest {
                best = cand;
                fbest = fcand;
            } else {
                break;
            }
        }
        *z = best;
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(roots)
}

/// Monic characteristic polynomial coefficients of a square matrix by the
/// Faddeev-LeVerrier recurrence, ascending order, length `order + 1`.
///
/// Exact in O(n^4) matrix arithmetic; intended as an independent cross-check
/// of the eigensolver on moderate orders rather than a production path.
pub fn charpoly_coeffs(a: &RMat) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "characteristic polynomial needs a square matrix");
    let mut coeffs = vec![0.0f64; n + 1];
    coeffs[n] = 1.0;
    let eye = RMat::identity(n, n);
    let mut am = a.clone();
    for k in 1..=n {
        let c = -am.trace() / k as f64;
        coeffs[n - k] = c;
        if k < n {
            am = a * (&am + &eye * c);
        }
    }
    coeffs
}
