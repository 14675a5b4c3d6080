//! Dense nonsymmetric eigendecomposition.
//!
//! Pipeline: Parlett-Reinsch balancing, Householder reduction to upper
//! Hessenberg form with accumulated orthogonal factor, Francis double-shift
//! QR iteration to the real Schur form, then right and left eigenvectors by
//! quasi-triangular substitution on the Schur factor. Real eigenvalue
//! clusters that are semisimple get their vectors replaced by an orthonormal
//! kernel basis, so repeated advection speeds do not produce spuriously
//! dependent eigenvectors.
//!
//! The iteration budget is 100 * order QR sweeps in total; exceeding it is a
//! hard error rather than a silent partial result.

use num_complex::Complex64;

use super::svd::jacobi_svd;
use super::{check_finite, CVec, NumericsError, RMat, MAX_EIG_ORDER};

/// Eigenvalues with unit right and left eigenvectors.
///
/// Entry k satisfies `A r_k = lambda_k r_k` and `l_k^T A = lambda_k l_k^T`
/// (plain transpose, not conjugate transpose). Entries are sorted by real
/// part, then imaginary part; complex eigenvalues come in exact conjugate
/// pairs with conjugate eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right: Vec<CVec>,
    pub left: Vec<CVec>,
}

impl EigenDecomposition {
    /// Relative right-eigenpair residual `||A r - lambda r|| / (||A||_F + 1e-300)`.
    pub fn right_residual(&self, a: &RMat, k: usize) -> f64 {
        let av = complex_mul(a, &self.right[k]);
        let mut num = 0.0f64;
        for i in 0..a.nrows() {
            num += (av[i] - self.values[k] * self.right[k][i]).norm_sqr();
        }
        num.sqrt() / (a.norm() + 1e-300)
    }

    /// Relative left-eigenpair residual `||A^T l - lambda l|| / (||A||_F + 1e-300)`.
    pub fn left_residual(&self, a: &RMat, k: usize) -> f64 {
        let at = a.transpose();
        let av = complex_mul(&at, &self.left[k]);
        let mut num = 0.0f64;
        for i in 0..a.nrows() {
            num += (av[i] - self.values[k] * self.left[k][i]).norm_sqr();
        }
        num.sqrt() / (a.norm() + 1e-300)
    }
}

fn complex_mul(a: &RMat, v: &CVec) -> CVec {
    let n = a.nrows();
    let mut out = CVec::from_element(n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..a.ncols() {
            acc += v[j] * a[(i, j)];
        }
        out[i] = acc;
    }
    out
}

/// Full eigendecomposition of a square real matrix.
pub fn eig_dense(a: &RMat) -> Result<EigenDecomposition, NumericsError> {
    let n = validate(a)?;
    let (t, q, d) = schur_form(a, true)?;
    let q = q.expect("accumulation was requested");
    let blocks = block_structure(&t);
    let tnorm = t.norm();

    let mut values = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for (bi, &(start, size)) in blocks.iter().enumerate() {
        if size == 1 {
            let lam = Complex64::new(t[(start, start)], 0.0);
            values.push(lam);
            right.push(assemble(&q, &d, &right_subst(&t, &blocks, bi, lam, tnorm), false));
            left.push(assemble(&q, &d, &left_subst(&t, &blocks, bi, lam, tnorm), true));
        } else {
            let (lam, _) = block_eigenvalue(&t, start);
            let r = assemble(&q, &d, &right_subst(&t, &blocks, bi, lam, tnorm), false);
            let l = assemble(&q, &d, &left_subst(&t, &blocks, bi, lam, tnorm), true);
            values.push(lam);
            right.push(r.clone());
            left.push(l.clone());
            values.push(lam.conj());
            right.push(r.map(|c| c.conj()));
            left.push(l.map(|c| c.conj()));
        }
    }

    repair_real_clusters(a, &mut values, &mut right, &mut left);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .re
            .total_cmp(&values[j].re)
            .then(values[i].im.total_cmp(&values[j].im))
    });
    Ok(EigenDecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        right: order.iter().map(|&i| right[i].clone()).collect(),
        left: order.iter().map(|&i| left[i].clone()).collect(),
    })
}

/// Eigenvalues only; skips the Schur-vector accumulation and substitution.
pub fn eigenvalues(a: &RMat) -> Result<Vec<Complex64>, NumericsError> {
    validate(a)?;
    let (t, _, _) = schur_form(a, false)?;
    let mut values = Vec::with_capacity(a.nrows());
    for &(start, size) in &block_structure(&t) {
        if size == 1 {
            values.push(Complex64::new(t[(start, start)], 0.0));
        } else {
            let (lam, _) = block_eigenvalue(&t, start);
            values.push(lam);
            values.push(lam.conj());
        }
    }
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(values)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(a: &RMat) -> Result<f64, NumericsError> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

fn validate(a: &RMat) -> Result<usize, NumericsError> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(NumericsError::InvalidInput(format!(
            "eigendecomposition needs a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n > MAX_EIG_ORDER {
        return Err(NumericsError::TooLarge {
            what: "eigendecomposition order".into(),
            got: n,
            max: MAX_EIG_ORDER,
        });
    }
    check_finite(a, "eigendecomposition input")?;
    Ok(n)
}

/// Real Schur form `A = D Q T Q^T D^-1` with D the balancing scaling.
///
/// Returns `(T, Q if accumulated, diag(D))`.
fn schur_form(
    a: &RMat,
    accumulate: bool,
) -> Result<(RMat, Option<RMat>, Vec<f64>), NumericsError> {
    let mut t = a.clone();
    let d = balance(&mut t);
    let mut q = hessenberg(&mut t, accumulate);
    francis_qr(&mut t, q.as_mut())?;
    Ok((t, q, d))
}

/// Parlett-Reinsch balancing: `A <- D^-1 A D` with powers-of-two scaling that
/// roughly equalizes row and column norms. Returns the diagonal of D.
fn balance(a: &mut RMat) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0f64; n];
    let radix = 2.0f64;
    let b2 = radix * radix;
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= b2;
            }
            g = r * radix;
            while c >= g {
                f /= radix;
                c /= b2;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                let ginv = 1.0 / f;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form, in place.
///
/// When `accumulate` is set, returns Q with `A_in = Q H Q^T`.
fn hessenberg(a: &mut RMat, accumulate: bool) -> Option<RMat> {
    let n = a.nrows();
    let mut q = if accumulate {
        Some(RMat::identity(n, n))
    } else {
        None
    };
    if n < 3 {
        return q;
    }
    let mut v = vec![0.0f64; n];
    for k in 0..n - 2 {
        let mut scale = 0.0;
        for i in k + 1..n {
            scale += a[(i, k)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut norm2 = 0.0;
        for i in k + 1..n {
            v[i] = a[(i, k)] / scale;
            norm2 += v[i] * v[i];
        }
        let mut alpha = norm2.sqrt();
        if v[k + 1] < 0.0 {
            alpha = -alpha;
        }
        v[k + 1] += alpha;
        let vnorm2 = 2.0 * alpha * v[k + 1];
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- P A with P = I - 2 v v^T / (v^T v), acting on rows k+1..n.
        for j in 0..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i] * a[(i, j)];
            }
            let beta = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                a[(i, j)] -= beta * v[i];
            }
        }
        // A <- A P, acting on columns k+1..n.
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += v[j] * a[(i, j)];
            }
            let beta = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                a[(i, j)] -= beta * v[j];
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let mut dot = 0.0;
                for j in k + 1..n {
                    dot += v[j] * q[(i, j)];
                }
                let beta = 2.0 * dot / vnorm2;
                for j in k + 1..n {
                    q[(i, j)] -= beta * v[j];
                }
            }
        }
        // Clear the annihilated entries explicitly.
        a[(k + 1, k)] = -alpha * scale;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
    q
}

/// Francis double-shift QR on an upper Hessenberg matrix, in place, reducing
/// it to real Schur form. 2x2 diagonal blocks with real eigenvalues are split
/// by a rotation, so remaining 2x2 blocks carry exact conjugate pairs.
fn francis_qr(h: &mut RMat, mut q: Option<&mut RMat>) -> Result<(), NumericsError> {
    let nn = h.nrows();
    let budget = 100 * nn;
    let eps = f64::EPSILON;

    let mut anorm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            anorm += h[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(());
    }

    let mut hi = nn as isize - 1;
    let mut exshift = 0.0f64;
    let mut iter = 0usize;
    let mut total = 0usize;
    let (mut p, mut qq, mut r, mut s, mut z, mut w, mut x, mut y);

    while hi >= 0 {
        let n = hi as usize;
        let mut l = n;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = anorm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[(n, n)] += exshift;
            if n > 0 {
                h[(n, n - 1)] = 0.0;
            }
            hi -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / 2.0;
            qq = p * p + w;
            z = qq.abs().sqrt();
            h[(n, n)] += exshift;
            h[(n - 1, n - 1)] += exshift;
            if qq >= 0.0 {
                // Real pair: rotate the block to triangular form.
                z = if p >= 0.0 { p + z } else { p - z };
                let xsub = h[(n, n - 1)];
                s = xsub.abs() + z.abs();
                p = xsub / s;
                qq = z / s;
                r = (p * p + qq * qq).sqrt();
                p /= r;
                qq /= r;
                for j in n - 1..nn {
                    z = h[(n - 1, j)];
                    h[(n - 1, j)] = qq * z + p * h[(n, j)];
                    h[(n, j)] = qq * h[(n, j)] - p * z;
                }
                for i in 0..=n {
                    z = h[(i, n - 1)];
                    h[(i, n - 1)] = qq * z + p * h[(i, n)];
                    h[(i, n)] = qq * h[(i, n)] - p * z;
                }
                if let Some(q) = q.as_deref_mut() {
                    for i in 0..nn {
                        z = q[(i, n - 1)];
                        q[(i, n - 1)] = qq * z + p * q[(i, n)];
                        q[(i, n)] = qq * q[(i, n)] - p * z;
                    }
                }
                h[(n, n - 1)] = 0.0;
            }
            if n > 1 {
                h[(n - 1, n - 2)] = 0.0;
            }
            hi -= 2;
            iter = 0;
        } else {
            // No convergence yet: run one double-shift sweep.
            total += 1;
            if total > budget {
                return Err(NumericsError::NonConvergence {
                    what: "Francis QR iteration".into(),
                    iterations: budget,
                });
            }
            x = h[(n, n)];
            y = h[(n - 1, n - 1)];
            w = h[(n, n - 1)] * h[(n - 1, n)];
            if iter == 10 || iter == 20 {
                // Exceptional shift. The shift must come off every diagonal
                // entry of the not-yet-converged leading range, not just the
                // active block: deflations below the current block add the
                // accumulated shift back.
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            iter += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                qq = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + qq.abs() + r.abs();
                p /= s;
                qq /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (qq.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR sweep over rows m..n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    qq = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + qq.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    qq /= x;
                    r /= x;
                }
                s = (p * p + qq * qq + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = qq / s;
                    z = r / s;
                    qq /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + qq * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    let top = if n < k + 3 { n } else { k + 3 };
                    for i in 0..=top {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * qq;
                    }
                    if let Some(q) = q.as_deref_mut() {
                        for i in 0..nn {
                            p = x * q[(i, k)] + y * q[(i, k + 1)];
                            if notlast {
                                p += z * q[(i, k + 2)];
                                q[(i, k + 2)] -= p * r;
                            }
                            q[(i, k)] -= p;
                            q[(i, k + 1)] -= p * qq;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Diagonal block layout of a real Schur factor: `(start, size)` per block.
fn block_structure(t: &RMat) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Eigenvalue with positive imaginary part of the 2x2 block at `start`.
fn block_eigenvalue(t: &RMat, start: usize) -> (Complex64, f64) {
    let a = t[(start, start)];
    let b = t[(start, start + 1)];
    let c = t[(start + 1, start)];
    let d = t[(start + 1, start + 1)];
    let mid = (a + d) / 2.0;
    let disc = ((a - d) / 2.0) * ((a - d) / 2.0) + b * c;
    if disc < 0.0 {
        (Complex64::new(mid, (-disc).sqrt()), disc)
    } else {
        // Degenerate split that survived rounding; treat as a real pair.
        (Complex64::new(mid + disc.sqrt(), 0.0), disc)
    }
}

fn guard(d: Complex64, smin: f64) -> Complex64 {
    if d.norm() < smin {
        Complex64::new(smin, 0.0)
    } else {
        d
    }
}

/// Solve the 2x2 complex system [[a,b],[c,d]] x = f by Cramer's rule with a
/// guarded determinant.
fn solve2(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
    f0: Complex64,
    f1: Complex64,
    smin: f64,
) -> (Complex64, Complex64) {
    let mut det = a * d - b * c;
    if det.norm() < smin * smin {
        det = Complex64::new(smin * smin, 0.0);
    }
    ((f0 * d - b * f1) / det, (a * f1 - c * f0) / det)
}

/// Right eigenvector of the Schur factor for the eigenvalue anchored at block
/// `bi`, by back substitution over the quasi-triangular structure.
fn right_subst(
    t: &RMat,
    blocks: &[(usize, usize)],
    bi: usize,
    lam: Complex64,
    tnorm: f64,
) -> Vec<Complex64> {
    let n = t.nrows();
    let smin = f64::EPSILON * (tnorm + 1e-300);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let (p, size) = blocks[bi];
    let top = p + size - 1;
    if size == 1 {
        x[p] = Complex64::new(1.0, 0.0);
    } else {
        let cand_a = (
            Complex64::new(t[(p, p + 1)], 0.0),
            lam - t[(p, p)],
        );
        let cand_b = (
            lam - t[(p + 1, p + 1)],
            Complex64::new(t[(p + 1, p)], 0.0),
        );
        let (x0, x1) = if cand_a.0.norm_sqr() + cand_a.1.norm_sqr()
            >= cand_b.0.norm_sqr() + cand_b.1.norm_sqr()
        {
            cand_a
        } else {
            cand_b
        };
        x[p] = x0;
        x[p + 1] = x1;
    }
    for bj in (0..bi).rev() {
        let (s, sz) = blocks[bj];
        if sz == 1 {
            let mut rhs = Complex64::new(0.0, 0.0);
            for c in s + 1..=top {
                rhs += x[c] * t[(s, c)];
            }
            // (t_ss - lam) x_s = -rhs
            x[s] = rhs / guard(lam - t[(s, s)], smin);
        } else {
            let mut r0 = Complex64::new(0.0, 0.0);
            let mut r1 = Complex64::new(0.0, 0.0);
            for c in s + 2..=top {
                r0 += x[c] * t[(s, c)];
                r1 += x[c] * t[(s + 1, c)];
            }
            let (a, b, c2, d) = (
                Complex64::new(t[(s, s)], 0.0) - lam,
                Complex64::new(t[(s, s + 1)], 0.0),
                Complex64::new(t[(s + 1, s)], 0.0),
                Complex64::new(t[(s + 1, s + 1)], 0.0) - lam,
            );
            let (x0, x1) = solve2(a, b, c2, d, -r0, -r1, smin);
            x[s] = x0;
            x[s + 1] = x1;
        }
    }
    x
}

/// Left (row) eigenvector of the Schur factor anchored at block `bi`, by
/// forward substitution; returned as a column of coefficients.
fn left_subst(
    t: &RMat,
    blocks: &[(usize, usize)],
    bi: usize,
    lam: Complex64,
    tnorm: f64,
) -> Vec<Complex64> {
    let n = t.nrows();
    let smin = f64::EPSILON * (tnorm + 1e-300);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let (p, size) = blocks[bi];
    let bottom = p;
    if size == 1 {
        y[p] = Complex64::new(1.0, 0.0);
    } else {
        let cand_a = (
            Complex64::new(t[(p + 1, p)], 0.0),
            lam - t[(p, p)],
        );
        let cand_b = (
            lam - t[(p + 1, p + 1)],
            Complex64::new(t[(p, p + 1)], 0.0),
        );
        let (y0, y1) = if cand_a.0.norm_sqr() + cand_a.1.norm_sqr()
            >= cand_b.0.norm_sqr() + cand_b.1.norm_sqr()
        {
            cand_a
        } else {
            cand_b
        };
        y[p] = y0;
        y[p + 1] = y1;
    }
    for bj in bi + 1..blocks.len() {
        let (s, sz) = blocks[bj];
        if sz == 1 {
            let mut rhs = Complex64::new(0.0, 0.0);
            for m in bottom..s {
                rhs += y[m] * t[(m, s)];
            }
            y[s] = rhs / guard(lam - t[(s, s)], smin);
        } else {
            let mut r0 = Complex64::new(0.0, 0.0);
            let mut r1 = Complex64::new(0.0, 0.0);
            for m in bottom..s {
                r0 += y[m] * t[(m, s)];
                r1 += y[m] * t[(m, s + 1)];
            }
            // (y_s, y_s1) (B - lam I) = -(r0, r1): transpose to column form.
            let (a, b, c2, d) = (
                Complex64::new(t[(s, s)], 0.0) - lam,
                Complex64::new(t[(s + 1, s)], 0.0),
                Complex64::new(t[(s, s + 1)], 0.0),
                Complex64::new(t[(s + 1, s + 1)], 0.0) - lam,
            );
            let (y0, y1) = solve2(a, b, c2, d, -r0, -r1, smin);
            y[s] = y0;
            y[s + 1] = y1;
        }
    }
    y
}

/// Map a Schur-basis coefficient vector back to the original basis, undo the
/// balancing, normalize, and fix the phase so the largest component is real
/// and positive.
fn assemble(q: &RMat, d: &[f64], coeffs: &[Complex64], is_left: bool) -> CVec {
    let n = q.nrows();
    let mut out = CVec::from_element(n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += coeffs[j] * q[(i, j)];
        }
        out[i] = if is_left { acc / d[i] } else { acc * d[i] };
    }
    normalize_phase(&mut out);
    out
}

fn normalize_phase(v: &mut CVec) {
    let mut norm = 0.0f64;
    let mut imax = 0;
    let mut vmax = 0.0f64;
    for i in 0..v.len() {
        let m = v[i].norm_sqr();
        norm += m;
        if m > vmax {
            vmax = m;
            imax = i;
        }
    }
    let norm = norm.sqrt();
    if norm == 0.0 {
        return;
    }
    let phase = v[imax] / v[imax].norm();
    let scale = phase.conj() / norm;
    for i in 0..v.len() {
        v[i] *= scale;
    }
}

/// Replace eigenvectors of repeated real semisimple eigenvalues with an
/// orthonormal kernel basis of `A - lambda I`, so the eigenvector matrix of a
/// diagonalizable input stays well conditioned. Clusters whose kernel is
/// smaller than their multiplicity (genuinely defective) are left untouched.
fn repair_real_clusters(
    a: &RMat,
    values: &mut [Complex64],
    right: &mut [CVec],
    left: &mut [CVec],
) {
    let n = a.nrows();
    let ctol = 1e-8 * (a.norm() + 1.0);
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] || values[i].im != 0.0 {
            continue;
        }
        let mut cluster = vec![i];
        for j in i + 1..values.len() {
            if !used[j] && values[j].im == 0.0 && (values[j].re - values[i].re).abs() <= ctol {
                cluster.push(j);
            }
        }
        for &j in &cluster {
            used[j] = true;
        }
        if cluster.len() < 2 {
            continue;
        }
        let mean = cluster.iter().map(|&j| values[j].re).sum::<f64>() / cluster.len() as f64;
        let mut shifted = a.clone();
        for k in 0..n {
            shifted[(k, k)] -= mean;
        }
        let ktol_of = |smax: f64| 1e-11 * (smax + 1e-300);
        if let Ok(svd_r) = jacobi_svd(&shifted) {
            let smax = svd_r.singular_values.first().copied().unwrap_or(0.0);
            let kernel: Vec<usize> = (0..svd_r.singular_values.len())
                .filter(|&k| svd_r.singular_values[k] <= ktol_of(smax))
                .collect();
            if kernel.len() == cluster.len() {
                for (slot, &k) in cluster.iter().zip(kernel.iter()) {
                    let mut v = CVec::from_element(n, Complex64::new(0.0, 0.0));
                    for r in 0..n {
                        v[r] = Complex64::new(svd_r.v[(r, k)], 0.0);
                    }
                    normalize_phase(&mut v);
                    right[*slot] = v;
                }
            }
        }
        let shifted_t = shifted.transpose();
        if let Ok(svd_l) = jacobi_svd(&shifted_t) {
            let smax = svd_l.singular_values.first().copied().unwrap_or(0.0);
            let kernel: Vec<usize> = (0..svd_l.singular_values.len())
                .filter(|&k| svd_l.singular_values[k] <= ktol_of(smax))
                .collect();
            if kernel.len() == cluster.len() {
                for (slot, &k) in cluster.iter().zip(kernel.iter()) {
                    let mut v = CVec::from_element(n, Complex64::new(0.0, 0.0));
                    for r in 0..n {
                        v[r] = Complex64::new(svd_l.v[(r, k)], 0.0);
                    }
                    normalize_phase(&mut v);
                    left[*slot] = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_ok(a: &RMat, e: &EigenDecomposition) {
        for k in 0..e.values.len() {
            assert!(
                e.right_residual(a, k) < 1e-10,
                "right residual {} for eigenvalue {}",
                e.right_residual(a, k),
                e.values[k]
            );
            assert!(
                e.left_residual(a, k) < 1e-10,
                "left residual {} for eigenvalue {}",
                e.left_residual(a, k),
                e.values[k]
            );
        }
    }

    #[test]
    fn diagonal_matrix_eigenvalues_are_the_diagonal() {
        let a = RMat::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5]);
        let e = eig_dense(&a).unwrap();
        let got: Vec<f64> = e.values.iter().map(|z| z.re).collect();
        assert_eq!(got, vec![-1.0, 0.5, 3.0]);
        residual_ok(&a, &e);
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        let a = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = eig_dense(&a).unwrap();
        assert!((e.values[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((e.values[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        residual_ok(&a, &e);
    }

    #[test]
    fn similarity_invariance_of_spectrum() {
        let a = RMat::from_row_slice(
            4,
            4,
            &[
                1.0, 2.0, 0.0, -1.0, 0.5, -0.5, 1.0, 0.0, 0.0, 1.5, 2.0, 1.0, 1.0, 0.0, -1.0, 3.0,
            ],
        );
        // Similarity by a fixed well-conditioned matrix.
        let p = RMat::from_row_slice(
            4,
            4,
            &[
                2.0, 1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.5, 0.0, 0.0, 2.0,
            ],
        );
        let pinv = p.clone().try_inverse().unwrap();
        let b = &p * &a * &pinv;
        let ea = eigenvalues(&a).unwrap();
        let eb = eigenvalues(&b).unwrap();
        for (x, y) in ea.iter().zip(eb.iter()) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn repeated_semisimple_eigenvalue_keeps_independent_vectors() {
        // Block diagonal: a 2x2 rotation-like block and a 3-fold eigenvalue 0.7
        // with a full eigenspace.
        let mut a = RMat::zeros(5, 5);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 0.5;
        a[(1, 1)] = -1.0;
        for k in 2..5 {
            a[(k, k)] = 0.7;
        }
        let e = eig_dense(&a).unwrap();
        residual_ok(&a, &e);
        let idx: Vec<usize> = (0..5)
            .filter(|&k| (e.values[k] - Complex64::new(0.7, 0.0)).norm() < 1e-9)
            .collect();
        assert_eq!(idx.len(), 3);
        // Pairwise nearly orthogonal after the kernel repair.
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                let mut dot = Complex64::new(0.0, 0.0);
                for r in 0..5 {
                    dot += e.right[idx[i]][r].conj() * e.right[idx[j]][r];
                }
                assert!(dot.norm() < 1e-8, "vectors {i},{j} dot {}", dot.norm());
            }
        }
    }

    #[test]
    fn order_limit_is_enforced() {
        let a = RMat::zeros(513, 513);
        match eig_dense(&a) {
            Err(NumericsError::TooLarge { .. }) => {}
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn companion_matrix_needing_exceptional_shifts() {
        // Regression: this companion matrix converges only through the
        // exceptional-shift path; the shift must be subtracted from the
        // whole unconverged diagonal or one eigenvalue comes back displaced
        // by the accumulated shift.
        let coeffs = [
            0.6792155903563067,
            -0.022054165612189525,
            -5.021762990850587,
            7.159229575416074,
            -1.4527476432155286,
            -2.3853944270250245,
            1.0,
        ];
        let n = 6;
        let mut c = RMat::zeros(n, n);
        for i in 0..n {
            c[(i, n - 1)] = -coeffs[i];
            if i + 1 < n {
                c[(i + 1, i)] = 1.0;
            }
        }
        let e = eig_dense(&c).unwrap();
        residual_ok(&c, &e);
        for z in &e.values {
            // Horner in complex arithmetic; all roots lie near 1 in size so
            // the raw residual bound is meaningful.
            let mut p = Complex64::new(0.0, 0.0);
            for &co in coeffs.iter().rev() {
                p = p * z + Complex64::new(co, 0.0);
            }
            assert!(p.norm() <= 1e-10, "eigenvalue {z} has residual {}", p.norm());
        }
    }
}
