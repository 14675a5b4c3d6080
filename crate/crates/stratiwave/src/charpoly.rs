//! Characteristic-polynomial factorization: det(A_x − λI) splits into the
//! n advective factors ∏(u_i − λ) and a reduced degree-2n polynomial
//! f_n(λ) = det M_x(λ) with M_x = (V_x − λI)² − ΓH.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{build_ax, build_gamma_matrix, DensityRatios, ModelError, State};
use crate::numerics::{
    determinant, poly_eval, poly_roots, CluFactor, CMat, NumericsError, RMat,
};

/// Layer cap for coefficient extraction; 2n stays within the degree limit of
/// the companion-matrix root finder.
pub const MAX_REDUCED_LAYERS: usize = 32;

#[derive(Debug, Error)]
pub enum CharpolyError {
    #[error("too many layers: {got} (max {max})")]
    TooManyLayers { got: usize, max: usize },
    #[error("layer index {got} out of range for {n} layers")]
    LayerOutOfRange { got: usize, n: usize },
    #[error("interpolation ill-conditioned: leading coefficient {lead:e} deviates from 1")]
    IllConditioned { lead: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The reduced spectral problem: coefficients of f_n, ascending in λ,
/// normalized monic (f_n has exact leading coefficient 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoly {
    coeffs: Vec<f64>,
}

impl ReducedPoly {
    /// Ascending coefficients, length 2n + 1.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        poly_eval(&self.coeffs, Complex64::new(lambda, 0.0)).re
    }

    /// All 2n roots, sorted by (re, im).
    pub fn roots(&self) -> Result<Vec<Complex64>, NumericsError> {
        poly_roots(&self.coeffs)
    }
}

/// Wave family attached to an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveLabel {
    /// Advection at the velocity of the given layer (zero-based).
    Advective(usize),
    /// Free-surface gravity wave moving the whole column, right/left going.
    BarotropicPlus,
    BarotropicMinus,
    /// Internal wave of the given interface (zero-based), right/left going.
    BaroclinicPlus(usize),
    BaroclinicMinus(usize),
    /// Vorticity advection in the given layer (augmented model only); the
    /// layer's advective eigenvalue moves from velocity to vorticity
    /// transport under augmentation.
    Vortical(usize),
    /// Stationary eigenvalue of the given layer (augmented model only).
    Zero(usize),
    Unlabeled,
}

/// Spectrum of the x-direction flux matrix: 3n eigenvalues with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub values: Vec<(Complex64, WaveLabel)>,
}

impl SpectrumReport {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.values.iter().map(|(z, _)| *z).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|(z, _)| z.im.abs()).fold(0.0, f64::max)
    }
}

/// The reduced matrix M_x(λ) = (V_x − λI)² − ΓH.
pub fn build_mx(lambda: f64, state: &State, gamma: &DensityRatios) -> Result<RMat, CharpolyError> {
    if !lambda.is_finite() {
        return Err(CharpolyError::Model(ModelError::InvalidValue(
            "evaluation point must be finite".into(),
        )));
    }
    let n = check_dims(state, gamma)?;
    let g = build_gamma_matrix(gamma);
    let mut m = RMat::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            m[(i, k)] = -g[(i, k)] * state.h()[k];
        }
        let d = state.u()[i] - lambda;
        m[(i, i)] += d * d;
    }
    Ok(m)
}

/// f_n(λ) = det M_x(λ).
pub fn fn_eval(lambda: f64, state: &State, gamma: &DensityRatios) -> Result<f64, CharpolyError> {
    let m = build_mx(lambda, state, gamma)?;
    Ok(determinant(&m))
}

/// First minor f_n^k(λ) = det of M_x(λ) with row and column k removed
/// (k zero-based); the empty determinant for n = 1 is 1.
pub fn fn_minor(
    k: usize,
    lambda: f64,
    state: &State,
    gamma: &DensityRatios,
) -> Result<f64, CharpolyError> {
    let n = check_dims(state, gamma)?;
    if k >= n {
        return Err(CharpolyError::LayerOutOfRange { got: k, n });
    }
    let m = build_mx(lambda, state, gamma)?;
    let mut sub = RMat::zeros(n - 1, n - 1);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let si = if i < k { i } else { i + 1 };
            let sj = if j < k { j } else { j + 1 };
            sub[(i, j)] = m[(si, sj)];
        }
    }
    Ok(determinant(&sub))
}

/// Coefficients of f_n by interpolation at 2n + 1 Chebyshev nodes on
/// [−R, R], R = 1 + max|u_i| + √(n·max h_i); the leading coefficient is
/// checked against the exact value 1 and normalized away.
pub fn reduced_poly(state: &State, gamma: &DensityRatios) -> Result<ReducedPoly, CharpolyError> {
    let n = check_dims(state, gamma)?;
    if n > MAX_REDUCED_LAYERS {
        return Err(CharpolyError::TooManyLayers { got: n, max: MAX_REDUCED_LAYERS });
    }
    let umax = state.u().iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let hmax = state.h().iter().fold(0.0f64, |m, h| m.max(*h));
    let radius = 1.0 + umax + (n as f64 * hmax).sqrt();

    let m = 2 * n + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|j| radius * (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * m) as f64).cos())
        .collect();
    let mut table: Vec<f64> =
        nodes.iter().map(|&x| fn_eval(x, state, gamma)).collect::<Result<_, _>>()?;
    if table.iter().any(|t| !t.is_finite()) {
        return Err(CharpolyError::IllConditioned { lead: f64::NAN });
    }

    // Newton divided differences, then expansion to the monomial basis.
    for level in 1..m {
        for j in (level..m).rev() {
            table[j] = (table[j] - table[j - 1]) / (nodes[j] - nodes[j - level]);
        }
    }
    let mut coeffs = vec![0.0; m];
    coeffs[0] = table[m - 1];
    let mut deg = 0usize;
    for j in (0..m - 1).rev() {
        // p ← c_j + (λ − x_j)·p
        deg += 1;
        for d in (1..=deg).rev() {
            coeffs[d] = coeffs[d - 1] - nodes[j] * coeffs[d];
        }
        coeffs[0] = table[j] - nodes[j] * coeffs[0];
    }

    let lead = coeffs[m - 1];
    if !lead.is_finite() || (lead - 1.0).abs() > 1e-6 {
        return Err(CharpolyError::IllConditioned { lead });
    }
    for c in &mut coeffs {
        *c /= lead;
    }
    Ok(ReducedPoly { coeffs })
}

/// Newton refinement of a reduced root directly on det M_x(λ), using
/// f′/f = tr(M⁻¹M′) with M′ = −2(V_x − λI). Pointwise determinant
/// evaluation is backward-stable, so this recovers the accuracy the
/// coefficient extraction loses on clustered roots.
fn polish_root(start: Complex64, state: &State, gamma: &DensityRatios) -> Complex64 {
    let n = state.n();
    let g = build_gamma_matrix(gamma);
    let mut lam = start;
    let mut best = start;
    let mut best_step = f64::INFINITY;
    for _ in 0..12 {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                m[(i, k)] = Complex64::new(-g[(i, k)] * state.h()[k], 0.0);
            }
            let d = Complex64::new(state.u()[i], 0.0) - lam;
            m[(i, i)] += d * d;
        }
        let Ok(lu) = CluFactor::new(&m) else { break };
        let inv = lu.inverse();
        let mut trace = Complex64::new(0.0, 0.0);
        for j in 0..n {
            trace += inv[(j, j)] * (Complex64::new(state.u()[j], 0.0) - lam) * -2.0;
        }
        if trace.norm() == 0.0 {
            break;
        }
        let step = -trace.inv();
        if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 0.5 {
            break;
        }
        if step.norm() < best_step {
            best_step = step.norm();
            best = lam + step;
        }
        lam += step;
        if step.norm() <= 1e-15 * (1.0 + lam.norm()) {
            break;
        }
    }
    best
}

/// Full spectrum of A_x: the 2n reduced roots (unlabeled) plus the n
/// advective eigenvalues u_i, sorted by (re, im).
pub fn full_spectrum(state: &State, gamma: &DensityRatios) -> Result<SpectrumReport, CharpolyError> {
    let n = check_dims(state, gamma)?;
    let reduced = reduced_poly(state, gamma)?;
    let mut values: Vec<(Complex64, WaveLabel)> = reduced
        .roots()?
        .into_iter()
        .map(|z| (polish_root(z, state, gamma), WaveLabel::Unlabeled))
        .collect();
    for i in 0..n {
        values.push((Complex64::new(state.u()[i], 0.0), WaveLabel::Advective(i)));
    }
    sort_report(&mut values);
    Ok(SpectrumReport { n, values })
}

/// Assigns each unlabeled eigenvalue the label of the nearest prediction;
/// ties go to the prediction listed first (callers order by interface).
pub fn assign_labels(values: &mut [(Complex64, WaveLabel)], predictions: &[(f64, WaveLabel)]) {
    if predictions.is_empty() {
        return;
    }
    for (z, label) in values.iter_mut() {
        if *label != WaveLabel::Unlabeled {
            continue;
        }
        let mut best = predictions[0];
        let mut best_d = (*z - Complex64::new(best.0, 0.0)).norm();
        for p in &predictions[1..] {
            let d = (*z - Complex64::new(p.0, 0.0)).norm();
            if d < best_d {
                best = *p;
                best_d = d;
            }
        }
        *label = best.1;
    }
}

/// Residual of the determinant factorization
/// |det(A_x − λI) − f_n(λ)·∏(u_i − λ)| / (1 + |det(A_x − λI)|).
pub fn verify_factorization(
    state: &State,
    gamma: &DensityRatios,
    lambda: f64,
) -> Result<f64, CharpolyError> {
    let n = check_dims(state, gamma)?;
    let ax = build_ax(state, gamma)?;
    let shifted = ax - RMat::identity(3 * n, 3 * n) * lambda;
    let lhs = determinant(&shifted);
    let advective: f64 = state.u().iter().map(|u| u - lambda).product();
    let rhs = fn_eval(lambda, state, gamma)? * advective;
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

fn check_dims(state: &State, gamma: &DensityRatios) -> Result<usize, CharpolyError> {
    if state.n() != gamma.n() {
        return Err(CharpolyError::Model(ModelError::DimensionMismatch(format!(
            "state has {} layers but ratios describe {}",
            state.n(),
            gamma.n()
        ))));
    }
    Ok(state.n())
}

fn sort_report(values: &mut [(Complex64, WaveLabel)]) {
    values.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig_dense;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ratios(g: &[f64]) -> DensityRatios {
        DensityRatios::new(g.to_vec()).unwrap()
    }

    /// Rest-state value of f_n at λ = 0: (−1)ⁿ h_n ∏ h_i(1−γ_i).
    fn fn_zero_closed_form(h: &[f64], gamma: &[f64]) -> f64 {
        let n = h.len();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let prod: f64 = (0..n - 1).map(|i| h[i] * (1.0 - gamma[i])).product();
        sign * h[n - 1] * prod
    }

    /// Rest-state value of f_n^k at λ = 0, zero-based k, three branches.
    fn fn_minor_zero_closed_form(k: usize, h: &[f64], gamma: &[f64]) -> f64 {
        let n = h.len();
        let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
        if k == 0 {
            let hp: f64 = h[1..].iter().product();
            let gp: f64 = gamma[1..].iter().map(|g| 1.0 - g).product();
            sign * hp * gp
        } else if k == n - 1 {
            let hp: f64 = h[..n - 1].iter().product();
            let gp: f64 = gamma[..n.saturating_sub(2)].iter().map(|g| 1.0 - g).product();
            sign * hp * gp
        } else {
            let eta = 1.0 - gamma[k - 1] * gamma[k];
            let hp: f64 =
                h.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| x).product();
            let gp: f64 = gamma
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k - 1 && *j != k)
                .map(|(_, g)| 1.0 - g)
                .product();
            sign * eta * hp * gp
        }
    }

    #[test]
    fn reduced_matrix_small_cases() {
        let st = State::rest(vec![1.0]).unwrap();
        let g = ratios(&[]);
        assert_eq!(build_mx(0.0, &st, &g).unwrap()[(0, 0)], -1.0);
        assert_eq!(build_mx(1.0, &st, &g).unwrap()[(0, 0)], 0.0);

        let st2 = State::rest(vec![1.0, 1.0]).unwrap();
        let m = build_mx(0.0, &st2, &ratios(&[0.5])).unwrap();
        assert_eq!(m[(0, 0)], -1.0);
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], -0.5);
        assert_eq!(m[(1, 1)], -1.0);
    }

    #[test]
    fn nonfinite_evaluation_points_are_rejected() {
        let st = State::rest(vec![1.0]).unwrap();
        let g = ratios(&[]);
        assert!(build_mx(f64::NAN, &st, &g).is_err());
        assert!(fn_eval(f64::INFINITY, &st, &g).is_err());
        assert!(verify_factorization(&st, &g, f64::NAN).is_err());
    }

    #[test]
    fn determinant_at_zero_matches_closed_form() {
        let st = State::rest(vec![1.0]).unwrap();
        assert_eq!(fn_eval(0.0, &st, &ratios(&[])).unwrap(), -1.0);

        let st2 = State::rest(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(
            fn_eval(0.0, &st2, &ratios(&[0.99])).unwrap(),
            0.01,
            max_relative = 1e-12
        );
    }

    #[test]
    fn equal_density_column_has_surface_speed_root() {
        // With all ratios equal to 1 the only nonzero reduced roots are the
        // surface pair ±√H.
        let st = State::rest(vec![0.7, 1.3, 0.5]).unwrap();
        let g = ratios(&[1.0, 1.0]);
        let hh = st.total_depth();
        assert_relative_eq!(fn_eval(hh.sqrt(), &st, &g).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(fn_eval(-hh.sqrt(), &st, &g).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn minor_worked_values() {
        let st2 = State::rest(vec![1.0, 1.0]).unwrap();
        assert_eq!(fn_minor(0, 0.0, &st2, &ratios(&[0.3])).unwrap(), -1.0);

        let st3 = State::rest(vec![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(
            fn_minor(1, 0.0, &st3, &ratios(&[0.9, 0.8])).unwrap(),
            0.28,
            max_relative = 1e-12
        );

        let st1 = State::rest(vec![2.0]).unwrap();
        assert_eq!(fn_minor(0, 0.37, &st1, &ratios(&[])).unwrap(), 1.0);
        assert!(fn_minor(1, 0.0, &st1, &ratios(&[])).is_err());
    }

    #[test]
    fn reduced_coefficients_single_layer() {
        let st = State::rest(vec![1.0]).unwrap();
        let p = reduced_poly(&st, &ratios(&[])).unwrap();
        for (got, want) in p.coeffs().iter().zip([-1.0, 0.0, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }

        let st2 = State::new(vec![1.0], vec![0.3], vec![0.0]).unwrap();
        let p2 = reduced_poly(&st2, &ratios(&[])).unwrap();
        // (0.3 − λ)² − 1 = λ² − 0.6λ − 0.91
        for (got, want) in p2.coeffs().iter().zip([-0.91, -0.6, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_layer_weak_stratification_roots() {
        let st = State::rest(vec![1.0, 1.0]).unwrap();
        let p = reduced_poly(&st, &ratios(&[0.99])).unwrap();
        let mut roots: Vec<f64> = p.roots().unwrap().iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        let fast = (1.0 + 0.99f64.sqrt()).sqrt();
        let slow = (1.0 - 0.99f64.sqrt()).sqrt();
        for (got, want) in roots.iter().zip([-fast, -slow, slow, fast]) {
            assert_relative_eq!(*got, want, max_relative = 1e-10);
        }
        // Leading-order asymptotics: ±√(H) − ε/(2H^{3/2})·h₁h₂ and ±√(εh₁h₂/H).
        let eps = 0.01;
        assert_relative_eq!(
            fast,
            2.0f64.sqrt() - eps / (2.0 * 2.0f64.powf(1.5)),
            max_relative = 2.0 * eps * eps
        );
        assert_relative_eq!(slow, (0.5 * eps).sqrt(), max_relative = eps);
    }

    #[test]
    fn merged_interface_carries_advective_speed() {
        let st = State::new(vec![1.0, 1.0], vec![0.4, 0.4], vec![0.0, 0.0]).unwrap();
        let rep = full_spectrum(&st, &ratios(&[1.0])).unwrap();
        // The merged root is a double root of the reduced polynomial, so
        // any root finder only locates it to about sqrt(eps).
        let reduced_hits = rep
            .values
            .iter()
            .filter(|(z, l)| *l == WaveLabel::Unlabeled && (z - 0.4).norm() < 1e-6)
            .count();
        assert!(reduced_hits >= 2, "merged interface roots collapse onto u_i");
    }

    #[test]
    fn single_layer_spectrum_closed_form() {
        let st = State::new(vec![1.0], vec![0.3], vec![0.0]).unwrap();
        let rep = full_spectrum(&st, &ratios(&[])).unwrap();
        let got: Vec<f64> = rep.values.iter().map(|(z, _)| z.re).collect();
        for (g, w) in got.iter().zip([-0.7, 0.3, 1.3]) {
            assert_relative_eq!(*g, w, epsilon = 1e-10);
        }
        assert_eq!(rep.values[1].1, WaveLabel::Advective(0));
    }

    #[test]
    fn label_assignment_prefers_nearest_then_first() {
        let mut values = vec![
            (Complex64::new(1.4, 0.0), WaveLabel::Unlabeled),
            (Complex64::new(0.1, 0.0), WaveLabel::Advective(0)),
        ];
        let preds = [
            (0.0, WaveLabel::BaroclinicPlus(0)),
            (1.4, WaveLabel::BarotropicPlus),
        ];
        assign_labels(&mut values, &preds);
        assert_eq!(values[0].1, WaveLabel::BarotropicPlus);
        assert_eq!(values[1].1, WaveLabel::Advective(0));

        // Equidistant case: the earlier prediction wins.
        let mut tie = vec![(Complex64::new(0.5, 0.0), WaveLabel::Unlabeled)];
        assign_labels(&mut tie, &[(0.0, WaveLabel::BaroclinicPlus(0)), (1.0, WaveLabel::BaroclinicPlus(1))]);
        assert_eq!(tie[0].1, WaveLabel::BaroclinicPlus(0));
    }

    #[test]
    fn factorization_residual_examples() {
        let st = State::new(
            vec![1.0, 0.4, 0.9],
            vec![0.2, -0.5, 0.1],
            vec![0.3, 0.0, -0.2],
        )
        .unwrap();
        let g = ratios(&[0.8, 0.95]);
        assert!(verify_factorization(&st, &g, 0.123).unwrap() <= 1e-10);
        assert!(verify_factorization(&st, &g, st.u()[0]).unwrap() <= 1e-12);

        let st1 = State::new(vec![2.0], vec![0.7], vec![0.0]).unwrap();
        assert!(verify_factorization(&st1, &ratios(&[]), -0.4).unwrap() <= 1e-14);
    }

    prop_compose! {
        fn arb_rest(n: usize)
            (h in prop::collection::vec(0.1f64..3.0, n),
             g in prop::collection::vec(0.2f64..0.999, n - 1))
            -> (Vec<f64>, Vec<f64>)
        {
            (h, g)
        }
    }

    proptest! {
        #[test]
        fn rest_determinant_closed_form_up_to_eight_layers(
            n in 1usize..=8,
            seed in prop::collection::vec(0.1f64..3.0, 8),
            gs in prop::collection::vec(0.2f64..0.999, 7),
        ) {
            let h = seed[..n].to_vec();
            let gamma = gs[..n - 1].to_vec();
            let st = State::rest(h.clone()).unwrap();
            let got = fn_eval(0.0, &st, &ratios(&gamma)).unwrap();
            let want = fn_zero_closed_form(&h, &gamma);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300));
        }

        #[test]
        fn rest_minor_closed_form_all_branches(
            n in 2usize..=6,
            seed in prop::collection::vec(0.1f64..3.0, 6),
            gs in prop::collection::vec(0.2f64..0.999, 5),
        ) {
            let h = seed[..n].to_vec();
            let gamma = gs[..n - 1].to_vec();
            let st = State::rest(h.clone()).unwrap();
            for k in 0..n {
                let got = fn_minor(k, 0.0, &st, &ratios(&gamma)).unwrap();
                let want = fn_minor_zero_closed_form(k, &h, &gamma);
                prop_assert!(
                    (got - want).abs() <= 1e-12 * want.abs(),
                    "k={k}: got {got}, want {want}"
                );
            }
        }

        #[test]
        fn factorization_residual_random_states(
            n in 1usize..=6,
            hs in prop::collection::vec(0.1f64..3.0, 6),
            us in prop::collection::vec(-1.5f64..1.5, 6),
            vs in prop::collection::vec(-1.5f64..1.5, 6),
            gs in prop::collection::vec(0.2f64..0.999, 5),
            lambda in -3.0f64..3.0,
        ) {
            let st = State::new(hs[..n].to_vec(), us[..n].to_vec(), vs[..n].to_vec()).unwrap();
            let g = ratios(&gs[..n - 1]);
            prop_assert!(verify_factorization(&st, &g, lambda).unwrap() <= 1e-9);
        }

        #[test]
        fn spectrum_matches_dense_eigensolver(
            n in 1usize..=5,
            hs in prop::collection::vec(0.1f64..3.0, 5),
            us in prop::collection::vec(-1.5f64..1.5, 5),
            gs in prop::collection::vec(0.2f64..0.999, 4),
        ) {
            let st = State::new(hs[..n].to_vec(), us[..n].to_vec(), vec![0.0; n]).unwrap();
            let g = ratios(&gs[..n - 1]);
            let rep = full_spectrum(&st, &g).unwrap();
            let a = build_ax(&st, &g).unwrap();
            let mut oracle = eig_dense(&a).unwrap().values;
            oracle.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            let got = rep.eigenvalues();
            prop_assert_eq!(got.len(), oracle.len());
            let scale = a.norm();
            for (g_, o) in got.iter().zip(&oracle) {
                prop_assert!((g_ - o).norm() <= 1e-8 * scale.max(1.0));
            }
        }
    }
}
