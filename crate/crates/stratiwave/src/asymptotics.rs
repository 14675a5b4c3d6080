//! Closed-form expansions of the flux-matrix eigenstructure in the weakly
//! stratified regime: internal-wave and surface-wave eigenvalue pairs, their
//! right and left eigenvectors, and the exact degenerate pairs of merged
//! layers.
//!
//! Every expansion is written against the zero-mean velocity frame; values
//! are shifted back before return, so callers see the original frame. Errors
//! of each expansion are quantified by `eig_residual` against the dense
//! eigensolver, never assumed.

use num_complex::Complex64;
use thiserror::Error;

use crate::charpoly::WaveLabel;
use crate::model::{rotation_matrix, DensityRatios, ModelError, State};
use crate::numerics::{RMat, RVec};
use crate::stratification::{interface_support, InterfaceSupport, StratScheme, StratificationError};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("interface {interface} carries a complex pair (radicand {radicand:e})")]
    ComplexPair { interface: usize, radicand: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stratification(#[from] StratificationError),
}

/// Branch of a wave pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Internal-wave eigenvalue pair of one interface.
///
/// The pair is real exactly when the radicand is nonnegative; a negative
/// radicand flags loss of hyperbolicity and the imaginary parts below are
/// the growth rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BaroclinicEig {
    pub plus: Complex64,
    pub minus: Complex64,
    /// Height-weighted mean speed of the coupled block.
    pub weighted_mean: f64,
    /// 1 − γ_i − (u_{i+1}−u_i)²/(h⁻+h⁺); sign decides realness.
    pub radicand: f64,
}

impl BaroclinicEig {
    pub fn is_real(&self) -> bool {
        self.radicand >= 0.0
    }
}

/// Expansion flavor for the surface pair.
#[derive(Debug, Clone, Copy)]
pub enum BarotropicMode<'a> {
    /// Quadratic-remainder expansion around the uniform column: valid for
    /// small jumps and small velocities, no scheme needed.
    FirstOrder,
    /// Regime expansion: shear correction at the strongest interface.
    Regime(&'a StratScheme),
}

/// One predicted eigenvalue with its expansion vectors.
#[derive(Debug, Clone)]
pub struct EigPrediction {
    pub label: WaveLabel,
    pub value: f64,
    /// Expected decay exponent of the prediction error in the stratification
    /// parameter; infinite for exact families.
    pub order_exponent: f64,
    pub right_vec: RVec,
    pub left_vec: RVec,
}

fn check_dims(state: &State, gamma: &DensityRatios) -> Result<usize, AsymptoticsError> {
    if state.n() != gamma.n() {
        return Err(AsymptoticsError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            state.n(),
            gamma.n()
        )));
    }
    Ok(state.n())
}

fn check_interface(i: usize, n: usize) -> Result<(), AsymptoticsError> {
    if n < 2 || i >= n - 1 {
        return Err(AsymptoticsError::InvalidInput(format!(
            "interface {i} out of range for {n} layers"
        )));
    }
    Ok(())
}

fn check_support(i: usize, support: &InterfaceSupport, n: usize) -> Result<(), AsymptoticsError> {
    if support.m_minus > i || support.m_plus <= i || support.m_plus >= n {
        return Err(AsymptoticsError::InvalidInput(format!(
            "support [{}, {}] does not bracket interface {i}",
            support.m_minus, support.m_plus
        )));
    }
    if !(support.h_minus > 0.0 && support.h_plus > 0.0) {
        return Err(AsymptoticsError::InvalidInput(
            "support heights must be positive".into(),
        ));
    }
    Ok(())
}

/// Internal-wave pair of interface `i` (zero-based, between layers i, i+1).
///
/// The pair is the height-weighted mean of the block speeds plus/minus the
/// interfacial wave speed; the shear eats into the radicand and a negative
/// radicand marks the hyperbolicity transition. A trivial support
/// (m_minus = i, m_plus = i+1) recovers the plain two-layer pair.
pub fn baroclinic_eig(
    i: usize,
    state: &State,
    gamma: &DensityRatios,
    support: &InterfaceSupport,
) -> Result<BaroclinicEig, AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    check_interface(i, n)?;
    check_support(i, support, n)?;
    let shift = state.u_mean();
    let hm = support.h_minus;
    let hp = support.h_plus;
    let ht = hm + hp;
    let ui = state.u()[i] - shift;
    let uj = state.u()[i + 1] - shift;
    let du = uj - ui;
    let weighted_mean = (uj * hm + ui * hp) / ht + shift;
    let radicand = 1.0 - gamma.gamma()[i] - du * du / ht;
    let speed2 = hm * hp / ht * radicand;
    let (plus, minus) = if radicand >= 0.0 {
        let b = speed2.sqrt();
        (
            Complex64::new(weighted_mean + b, 0.0),
            Complex64::new(weighted_mean - b, 0.0),
        )
    } else {
        let b = (-speed2).sqrt();
        (
            Complex64::new(weighted_mean, b),
            Complex64::new(weighted_mean, -b),
        )
    };
    Ok(BaroclinicEig { plus, minus, weighted_mean, radicand })
}

/// Surface-wave pair.
///
/// First-order mode: mean speed plus/minus the jump-corrected column speed.
/// Regime mode: speed of the layer above the strongest interface, shifted by
/// the shear there, plus/minus the plain column speed.
pub fn barotropic_eig(
    state: &State,
    gamma: &DensityRatios,
    mode: BarotropicMode,
) -> Result<(f64, f64), AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    let total = state.total_depth();
    if !(total > 0.0) {
        return Err(AsymptoticsError::InvalidInput(
            "total depth must be positive".into(),
        ));
    }
    let shift = state.u_mean();
    match mode {
        BarotropicMode::FirstOrder => {
            let h = state.h();
            let mut correction = 0.0;
            let mut above = 0.0;
            for j in 0..n - 1 {
                above += h[j];
                correction += (1.0 - gamma.gamma()[j]) * above * (total - above);
            }
            correction /= 2.0 * total.powf(1.5);
            let speed = total.sqrt() - correction;
            Ok((shift + speed, shift - speed))
        }
        BarotropicMode::Regime(scheme) => {
            if scheme.interfaces() != n - 1 {
                return Err(AsymptoticsError::InvalidInput(format!(
                    "scheme describes {} interfaces, state has {}",
                    scheme.interfaces(),
                    n - 1
                )));
            }
            let m = scheme.argmin_sigma();
            let um = state.u()[m] - shift;
            let du = state.u()[m + 1] - state.u()[m];
            let below: f64 = state.h()[m + 1..].iter().sum();
            let base = um + du * below / total + shift;
            Ok((base + total.sqrt(), base - total.sqrt()))
        }
    }
}

/// Scaled deviation λ_i^± − u_i of the internal pair, used by both
/// eigenvector slots; `None` when the pair is complex.
fn chi_scaled(du: f64, one_minus_gamma: f64, hm: f64, hp: f64, sign: Sign) -> Option<f64> {
    let ht = hm + hp;
    let radicand = one_minus_gamma - du * du / ht;
    if radicand < 0.0 {
        return None;
    }
    Some(du * hm / ht + sign.factor() * (hm * hp / ht * radicand).sqrt())
}

/// Right and left eigenvector expansions for the internal pair of
/// interface `i`.
///
/// Height slots carry the block signature (equal weights up, equal weights
/// down); velocity slots carry the first-order correction, with the shear
/// entering the lower block through χ − Δu. Transverse slots stay zero.
pub fn baroclinic_eigvecs(
    i: usize,
    state: &State,
    gamma: &DensityRatios,
    support: &InterfaceSupport,
    sign: Sign,
) -> Result<(RVec, RVec), AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    check_interface(i, n)?;
    check_support(i, support, n)?;
    let hm = support.h_minus;
    let hp = support.h_plus;
    let du = state.u()[i + 1] - state.u()[i];
    let chi = chi_scaled(du, 1.0 - gamma.gamma()[i], hm, hp, sign).ok_or({
        AsymptoticsError::ComplexPair {
            interface: i,
            radicand: 1.0 - gamma.gamma()[i] - du * du / (hm + hp),
        }
    })?;
    let above = (i - support.m_minus + 1) as f64;
    let below = (support.m_plus - i) as f64;
    let mut right = RVec::zeros(3 * n);
    let mut left = RVec::zeros(3 * n);
    for j in support.m_minus..=i {
        right[j] = 1.0 / above;
        left[n + j] = 1.0 / above;
        let c = chi / (above * state.h()[j]);
        right[n + j] = c;
        left[j] = c;
    }
    for j in i + 1..=support.m_plus {
        right[j] = -1.0 / below;
        left[n + j] = -1.0 / below;
        let c = -(chi - du) / (below * state.h()[j]);
        right[n + j] = c;
        left[j] = c;
    }
    Ok((right, left))
}

/// Right and left eigenvector expansions for the surface pair.
///
/// Without a scheme only the column-wave shape is returned (exact at rest);
/// with one, the shear at the strongest interface adds the first-order
/// split correction.
pub fn barotropic_eigvecs(
    state: &State,
    gamma: &DensityRatios,
    scheme: Option<&StratScheme>,
    sign: Sign,
) -> Result<(RVec, RVec), AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    let total = state.total_depth();
    if !(total > 0.0) {
        return Err(AsymptoticsError::InvalidInput(
            "total depth must be positive".into(),
        ));
    }
    let s = sign.factor();
    let root = total.sqrt();
    let mut right = RVec::zeros(3 * n);
    let mut left = RVec::zeros(3 * n);
    for k in 0..n {
        right[k] = s * state.h()[k] / root;
        right[n + k] = 1.0;
        left[k] = 1.0;
        left[n + k] = s * state.h()[k] / root;
    }
    if let Some(scheme) = scheme {
        if scheme.interfaces() != n - 1 {
            return Err(AsymptoticsError::InvalidInput(format!(
                "scheme describes {} interfaces, state has {}",
                scheme.interfaces(),
                n - 1
            )));
        }
        let m = scheme.argmin_sigma();
        let du = state.u()[m + 1] - state.u()[m];
        let hm: f64 = state.h()[..=m].iter().sum();
        let hp: f64 = state.h()[m + 1..].iter().sum();
        // Solved first-order coefficients: du·h⁺/(H√H) above the strongest
        // interface, du·h⁻/(H√H) below, opposite orientations.
        let c_above = du * hp / (total * root);
        let c_below = du * hm / (total * root);
        for k in 0..n {
            let (c, orient) = if k <= m { (c_above, -1.0) } else { (c_below, 1.0) };
            right[k] += orient * c * 2.0 * state.h()[k] / root;
            right[n + k] += orient * c * s;
            left[n + k] += orient * c * 2.0 * state.h()[k] / root;
            left[k] += orient * c * s;
        }
    }
    Ok((right, left))
}

/// Exact degenerate pair of a merged interface: equal speeds and ratio one
/// across interface `i` make the speed an exact eigenvalue with an exact
/// two-slot eigenvector on each side.
pub fn merged_eigpair(
    i: usize,
    state: &State,
    gamma: &DensityRatios,
) -> Result<(f64, RVec, RVec), AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    check_interface(i, n)?;
    if gamma.gamma()[i] != 1.0 {
        return Err(AsymptoticsError::InvalidInput(format!(
            "interface {i} is not merged: ratio {} != 1",
            gamma.gamma()[i]
        )));
    }
    if state.u()[i] != state.u()[i + 1] {
        return Err(AsymptoticsError::InvalidInput(format!(
            "interface {i} is not merged: speeds {} != {}",
            state.u()[i],
            state.u()[i + 1]
        )));
    }
    let mut right = RVec::zeros(3 * n);
    right[i] = 1.0;
    right[i + 1] = -1.0;
    let mut left = RVec::zeros(3 * n);
    left[n + i] = 1.0;
    left[n + i + 1] = -1.0;
    Ok((state.u()[i], right, left))
}

/// Transplants an x-direction eigenpair to the direction θ: the right vector
/// through the inverse frame rotation, the left one through the forward.
pub fn rotate_eigpair(
    right: &RVec,
    left: &RVec,
    theta: f64,
) -> Result<(RVec, RVec), AsymptoticsError> {
    if right.len() != left.len() || right.len() % 3 != 0 || right.is_empty() {
        return Err(AsymptoticsError::InvalidInput(format!(
            "eigenpair lengths {} and {} must match and be a multiple of 3",
            right.len(),
            left.len()
        )));
    }
    if !theta.is_finite() {
        return Err(AsymptoticsError::InvalidInput("angle must be finite".into()));
    }
    let n = right.len() / 3;
    let p = rotation_matrix(n, theta);
    let p_inv = rotation_matrix(n, -theta);
    Ok((&p_inv * right, (left.transpose() * p).transpose()))
}

/// Relative residuals of a candidate eigenpair: (‖Ar − λr‖, ‖ᵀlA − λᵀl‖),
/// each scaled by the Frobenius norm of A and the vector norm.
pub fn eig_residual(
    a: &RMat,
    lambda: f64,
    right: &RVec,
    left: &RVec,
) -> Result<(f64, f64), AsymptoticsError> {
    if !a.is_square() || a.nrows() != right.len() || a.nrows() != left.len() {
        return Err(AsymptoticsError::InvalidInput(format!(
            "matrix {}x{} incompatible with vectors of length {} and {}",
            a.nrows(),
            a.ncols(),
            right.len(),
            left.len()
        )));
    }
    if !lambda.is_finite() {
        return Err(AsymptoticsError::InvalidInput("eigenvalue must be finite".into()));
    }
    let norm_a = a.norm();
    let scale_r = norm_a * right.norm();
    let scale_l = norm_a * left.norm();
    if scale_r == 0.0 || scale_l == 0.0 {
        return Err(AsymptoticsError::InvalidInput(
            "matrix and vectors must be nonzero".into(),
        ));
    }
    let res_r = (a * right - right * lambda).norm() / scale_r;
    let res_l = ((left.transpose() * a).transpose() - left * lambda).norm() / scale_l;
    Ok((res_r, res_l))
}

/// Assembles the full predicted x-direction spectrum of a regime state:
/// n exact advective entries, n−1 internal pairs, and the surface pair.
/// Any complex internal pair aborts with its interface and radicand.
pub fn predict_spectrum(
    state: &State,
    gamma: &DensityRatios,
    scheme: &StratScheme,
) -> Result<Vec<EigPrediction>, AsymptoticsError> {
    let n = check_dims(state, gamma)?;
    if scheme.interfaces() != n - 1 {
        return Err(AsymptoticsError::InvalidInput(format!(
            "scheme describes {} interfaces, state has {}",
            scheme.interfaces(),
            n - 1
        )));
    }
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let mut right = RVec::zeros(3 * n);
        right[2 * n + i] = 1.0;
        out.push(EigPrediction {
            label: WaveLabel::Advective(i),
            value: state.u()[i],
            order_exponent: f64::INFINITY,
            right_vec: right.clone(),
            left_vec: right,
        });
    }
    for i in 0..n - 1 {
        let support = interface_support(i, scheme, state.h())?;
        let pair = baroclinic_eig(i, state, gamma, &support)?;
        if !pair.is_real() {
            return Err(AsymptoticsError::ComplexPair {
                interface: i,
                radicand: pair.radicand,
            });
        }
        let order = (scheme.sigma()[i] + 1.0) / 2.0;
        for (sign, label, value) in [
            (Sign::Plus, WaveLabel::BaroclinicPlus(i), pair.plus.re),
            (Sign::Minus, WaveLabel::BaroclinicMinus(i), pair.minus.re),
        ] {
            let (right, left) = baroclinic_eigvecs(i, state, gamma, &support, sign)?;
            out.push(EigPrediction {
                label,
                value,
                order_exponent: order,
                right_vec: right,
                left_vec: left,
            });
        }
    }
    let (plus, minus) = barotropic_eig(state, gamma, BarotropicMode::Regime(scheme))?;
    for (sign, label, value) in [
        (Sign::Plus, WaveLabel::BarotropicPlus, plus),
        (Sign::Minus, WaveLabel::BarotropicMinus, minus),
    ] {
        let (right, left) = barotropic_eigvecs(state, gamma, Some(scheme), sign)?;
        out.push(EigPrediction {
            label,
            value,
            order_exponent: 1.0,
            right_vec: right,
            left_vec: left,
        });
    }
    Ok(out)
}

/// Plain two-layer-style pair of interface `i`, ignoring any wider coupling
/// block: kept as an independent derivation against which the trivial-support
/// case of `baroclinic_eig` is checked.
#[allow(dead_code)]
fn two_layer_eig(i: usize, state: &State, gamma: &DensityRatios) -> (Complex64, Complex64) {
    let hi = state.h()[i];
    let hj = state.h()[i + 1];
    let ui = state.u()[i];
    let uj = state.u()[i + 1];
    let ht = hi + hj;
    let mean = (ui * hj + uj * hi) / ht;
    let speed2 = hi * hj / ht * (1.0 - gamma.gamma()[i] - (uj - ui) * (uj - ui) / ht);
    if speed2 >= 0.0 {
        let b = speed2.sqrt();
        (Complex64::new(mean + b, 0.0), Complex64::new(mean - b, 0.0))
    } else {
        let b = (-speed2).sqrt();
        (Complex64::new(mean, b), Complex64::new(mean, -b))
    }
}

/// Two-layer-style eigenvectors of interface `i`, written out slot by slot
/// as an independent derivation for the trivial-support cross-check.
#[allow(dead_code)]
fn two_layer_eigvecs(i: usize, state: &State, gamma: &DensityRatios, sign: Sign) -> (RVec, RVec) {
    let n = state.n();
    let hi = state.h()[i];
    let hj = state.h()[i + 1];
    let ht = hi + hj;
    let du = state.u()[i + 1] - state.u()[i];
    let b = sign.factor()
        * (hi * hj / ht * (1.0 - gamma.gamma()[i] - du * du / ht)).sqrt();
    let mut right = RVec::zeros(3 * n);
    right[i] = 1.0;
    right[i + 1] = -1.0;
    right[n + i] = du / ht + b / hi;
    right[n + i + 1] = du / ht - b / hj;
    let mut left = RVec::zeros(3 * n);
    left[n + i] = 1.0;
    left[n + i + 1] = -1.0;
    left[i] = du / ht + b / hi;
    left[i + 1] = du / ht - b / hj;
    (right, left)
}
