//! Conservative reformulation of the layered model: the state is extended
//! by per-layer vorticities to 4n components, which buys a conservative
//! form and a Friedrichs symmetrizer at the price of n extra stationary
//! eigenvalues.
//!
//! Also houses the scaled "hat" variables of the one-dimensional system
//! (whose flux is an energy gradient), the Frobenius commutant that
//! constrains conserved quantities, and the curl compatibility check that
//! ties the vorticity components back to the velocity field.

use num_complex::Complex64;
use thiserror::Error;

use crate::asymptotics::{
    baroclinic_eig, baroclinic_eigvecs, barotropic_eig, barotropic_eigvecs, AsymptoticsError,
    BarotropicMode, Sign,
};
use crate::charpoly::{full_spectrum, CharpolyError, SpectrumReport, WaveLabel};
use crate::hyperbolicity::{ClassifyOptions, NumericVerdict};
use crate::model::{
    build_ax, build_gamma_matrix, rotate_state, AugmentedState, DensityRatios, ModelError, State,
};
use crate::numerics::{
    cond2_complex, determinant, eig_dense, nullspace, spectral_radius, CMat, NumericsError, RMat,
    RVec,
};
use crate::stratification::{fit_regime, interface_support};
use crate::symmetrizer::{check_symmetrizable_augmented, SymmetrizerError};

/// Commutant solves work on (2n)² unknowns; this caps 2n.
pub const MAX_COMMUTANT_ORDER: usize = 24;

#[derive(Debug, Error)]
pub enum AugmentedError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix order {got} exceeds supported maximum {max}")]
    TooLarge { got: usize, max: usize },
    #[error(
        "eigenvalue {lambda} coincides with the advective speed {pivot} of layer {layer}; \
         the vorticity lift divides by their gap"
    )]
    DegenerateLift { lambda: f64, pivot: f64, layer: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Charpoly(#[from] CharpolyError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Symmetrizer(#[from] SymmetrizerError),
}

fn check_dims(aug: &AugmentedState, gamma: &DensityRatios) -> Result<usize, AugmentedError> {
    let n = aug.base().n();
    if n != gamma.n() {
        return Err(AugmentedError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            n,
            gamma.n()
        )));
    }
    Ok(n)
}

/// x-direction flux matrix of the augmented model, order 4n. The velocity-y
/// block row is zero (v is not transported by the x flux); vorticity rides
/// on the velocity divergence through W = diag(w_i + f).
pub fn build_aa_x(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
) -> Result<RMat, AugmentedError> {
    let n = check_dims(aug, gamma)?;
    let st = aug.base();
    let gm = build_gamma_matrix(gamma);
    let mut a = RMat::zeros(4 * n, 4 * n);
    for i in 0..n {
        a[(i, i)] = st.u()[i];
        a[(i, n + i)] = st.h()[i];
        for k in 0..n {
            a[(n + i, k)] = gm[(i, k)];
        }
        a[(n + i, n + i)] = st.u()[i];
        a[(n + i, 2 * n + i)] = st.v()[i];
        a[(3 * n + i, n + i)] = aug.w()[i] + f;
        a[(3 * n + i, 3 * n + i)] = st.u()[i];
    }
    Ok(a)
}

/// y-direction flux matrix of the augmented model; mirror of `build_aa_x`
/// with the velocity-x block row zero.
pub fn build_aa_y(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
) -> Result<RMat, AugmentedError> {
    let n = check_dims(aug, gamma)?;
    let st = aug.base();
    let gm = build_gamma_matrix(gamma);
    let mut a = RMat::zeros(4 * n, 4 * n);
    for i in 0..n {
        a[(i, i)] = st.v()[i];
        a[(i, 2 * n + i)] = st.h()[i];
        for k in 0..n {
            a[(2 * n + i, k)] = gm[(i, k)];
        }
        a[(2 * n + i, n + i)] = st.u()[i];
        a[(2 * n + i, 2 * n + i)] = st.v()[i];
        a[(3 * n + i, 2 * n + i)] = aug.w()[i] + f;
        a[(3 * n + i, 3 * n + i)] = st.v()[i];
    }
    Ok(a)
}

/// Rotation operator of the augmented state space: heights and vorticities
/// are scalars, the velocity pair rotates.
pub fn augmented_rotation_matrix(n: usize, theta: f64) -> RMat {
    let (s, c) = theta.sin_cos();
    let mut p = RMat::zeros(4 * n, 4 * n);
    for i in 0..n {
        p[(i, i)] = 1.0;
        p[(n + i, n + i)] = c;
        p[(n + i, 2 * n + i)] = s;
        p[(2 * n + i, n + i)] = -s;
        p[(2 * n + i, 2 * n + i)] = c;
        p[(3 * n + i, 3 * n + i)] = 1.0;
    }
    p
}

/// The augmented state seen from a frame rotated by `theta`; vorticity is
/// rotation-invariant.
pub fn rotate_augmented(aug: &AugmentedState, theta: f64) -> Result<AugmentedState, AugmentedError> {
    let base = rotate_state(aug.base(), theta);
    Ok(AugmentedState::new(base, aug.w().to_vec())?)
}

/// Directional flux cosθ·A^a_x + sinθ·A^a_y; coincides with the conjugated
/// x-flux of the rotated state.
pub fn build_aa_theta(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
    theta: f64,
) -> Result<RMat, AugmentedError> {
    if !theta.is_finite() {
        return Err(AugmentedError::InvalidInput("direction angle must be finite".into()));
    }
    let ax = build_aa_x(aug, gamma, f)?;
    let ay = build_aa_y(aug, gamma, f)?;
    Ok(ax * theta.cos() + ay * theta.sin())
}

/// Spectrum of A^a_x: the base-model spectrum with the advective family
/// relabeled as vortical, plus a zero eigenvalue per layer. Independent of
/// the vorticities and of f.
pub fn augmented_spectrum(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    _f: f64,
) -> Result<SpectrumReport, AugmentedError> {
    let n = check_dims(aug, gamma)?;
    let base = full_spectrum(aug.base(), gamma)?;
    let mut values: Vec<(Complex64, WaveLabel)> = base
        .values
        .into_iter()
        .map(|(z, label)| match label {
            WaveLabel::Advective(i) => (z, WaveLabel::Vortical(i)),
            other => (z, other),
        })
        .collect();
    for i in 0..n {
        values.push((Complex64::new(0.0, 0.0), WaveLabel::Zero(i)));
    }
    values.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(SpectrumReport { n, values })
}

/// Relative defect of det(A^a_x − λI) = λⁿ·det(A_x − λI) at one λ.
pub fn spectrum_relation_residual(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
    lambda: f64,
) -> Result<f64, AugmentedError> {
    if !lambda.is_finite() {
        return Err(AugmentedError::InvalidInput(
            "evaluation point must be finite".into(),
        ));
    }
    let n = check_dims(aug, gamma)?;
    let aa = build_aa_x(aug, gamma, f)?;
    let ax = build_ax(aug.base(), gamma)?;
    let lhs = determinant(&(aa - RMat::identity(4 * n, 4 * n) * lambda));
    let rhs = lambda.powi(n as i32) * determinant(&(ax - RMat::identity(3 * n, 3 * n) * lambda));
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0))
}

/// One-dimensional system in density-scaled variables ĥ_i = α_{n,i}·h_i,
/// û_i = u_i; in these variables the flux matrix is an energy gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct HatState {
    hat_h: Vec<f64>,
    hat_u: Vec<f64>,
}

impl HatState {
    pub fn new(hat_h: Vec<f64>, hat_u: Vec<f64>) -> Result<Self, AugmentedError> {
        if hat_h.is_empty() || hat_h.len() != hat_u.len() {
            return Err(AugmentedError::InvalidInput(
                "hat state needs equally many heights and velocities, at least one layer".into(),
            ));
        }
        if hat_h.iter().chain(&hat_u).any(|x| !x.is_finite()) {
            return Err(AugmentedError::InvalidInput("hat state entries must be finite".into()));
        }
        Ok(Self { hat_h, hat_u })
    }

    pub fn from_state(state: &crate::model::State, gamma: &DensityRatios) -> Result<Self, AugmentedError> {
        if state.n() != gamma.n() {
            return Err(AugmentedError::InvalidInput(format!(
                "state has {} layers but ratios describe {}",
                state.n(),
                gamma.n()
            )));
        }
        let alpha = gamma.alpha_bottom();
        Self::new(
            state.h().iter().zip(&alpha).map(|(h, a)| h * a).collect(),
            state.u().to_vec(),
        )
    }

    pub fn n(&self) -> usize {
        self.hat_h.len()
    }

    pub fn hat_h(&self) -> &[f64] {
        &self.hat_h
    }

    pub fn hat_u(&self) -> &[f64] {
        &self.hat_u
    }
}

fn check_hat_dims(hat: &HatState, gamma: &DensityRatios) -> Result<usize, AugmentedError> {
    if hat.n() != gamma.n() {
        return Err(AugmentedError::InvalidInput(format!(
            "hat state has {} layers but ratios describe {}",
            hat.n(),
            gamma.n()
        )));
    }
    Ok(hat.n())
}

/// Energy of the hat variables,
/// ê₁ = ½Σ ĥ_i(û_i² + ĥ_i/α_{n,i}) + Σ_{i<j} ĥ_iĥ_j/α_{n,j};
/// equals the planar energy of the source state exactly.
pub fn hat_e1(hat: &HatState, gamma: &DensityRatios) -> Result<f64, AugmentedError> {
    let n = check_hat_dims(hat, gamma)?;
    let alpha = gamma.alpha_bottom();
    let mut e = 0.0;
    for i in 0..n {
        e += 0.5 * hat.hat_h[i] * (hat.hat_u[i] * hat.hat_u[i] + hat.hat_h[i] / alpha[i]);
        for j in i + 1..n {
            e += hat.hat_h[i] * hat.hat_h[j] / alpha[j];
        }
    }
    Ok(e)
}

/// Flux matrix in hat variables: [[V̂, Ĥ], [G, V̂]] with
/// G_{ik} = 1/α_{n,max(i,k)}; symmetric pressure block, so the matrix is an
/// energy gradient.
pub fn build_hat_flux(hat: &HatState, gamma: &DensityRatios) -> Result<RMat, AugmentedError> {
    let n = check_hat_dims(hat, gamma)?;
    let alpha = gamma.alpha_bottom();
    let mut a = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, i)] = hat.hat_u[i];
        a[(i, n + i)] = hat.hat_h[i];
        for k in 0..n {
            a[(n + i, k)] = 1.0 / alpha[i.max(k)];
        }
        a[(n + i, n + i)] = hat.hat_u[i];
    }
    Ok(a)
}

/// Relative defect of the gradient-flux identity: the hat flux must equal
/// the block swap of the Hessian of ê₁. The Hessian is measured by central
/// cross differences; ê₁ is cubic, so the differences carry no truncation
/// error and the step only guards round-off.
pub fn hat_structure_check(hat: &HatState, gamma: &DensityRatios) -> Result<f64, AugmentedError> {
    let n = check_hat_dims(hat, gamma)?;
    if hat.hat_h().iter().any(|&h| h <= 0.0) {
        return Err(AugmentedError::InvalidInput(
            "hat heights must be strictly positive".into(),
        ));
    }
    let m = 2 * n;
    let coords: Vec<f64> = hat.hat_h.iter().chain(&hat.hat_u).copied().collect();
    let eval = |z: &[f64]| -> Result<f64, AugmentedError> {
        let st = HatState::new(z[..n].to_vec(), z[n..].to_vec())?;
        hat_e1(&st, gamma)
    };
    let mut hess = RMat::zeros(m, m);
    for a in 0..m {
        let sa = 1e-3 * (1.0 + coords[a].abs());
        for b in a..m {
            let sb = 1e-3 * (1.0 + coords[b].abs());
            let mut z = coords.clone();
            let val = if a == b {
                z[a] = coords[a] + sa;
                let plus = eval(&z)?;
                z[a] = coords[a] - sa;
                let minus = eval(&z)?;
                (plus - 2.0 * eval(&coords)? + minus) / (sa * sa)
            } else {
                let mut corner = |da: f64, db: f64| -> Result<f64, AugmentedError> {
                    z[a] = coords[a] + da;
                    z[b] = coords[b] + db;
                    eval(&z)
                };
                (corner(sa, sb)? - corner(sa, -sb)? - corner(-sa, sb)? + corner(-sa, -sb)?)
                    / (4.0 * sa * sb)
            };
            hess[(a, b)] = val;
            hess[(b, a)] = val;
        }
    }
    let mut swap = RMat::zeros(m, m);
    for i in 0..n {
        swap[(i, n + i)] = 1.0;
        swap[(n + i, i)] = 1.0;
    }
    let a_hat = build_hat_flux(hat, gamma)?;
    Ok((&a_hat - swap * hess).norm() / a_hat.norm())
}

/// Space of matrices commuting with the hat flux. Returns the dimension and
/// an orthonormal (under vectorization) basis; for simple spectrum the
/// dimension is 2n and the span is that of the first 2n powers.
pub fn frobenius_commutant(
    hat: &HatState,
    gamma: &DensityRatios,
) -> Result<(usize, Vec<RMat>), AugmentedError> {
    let n = check_hat_dims(hat, gamma)?;
    let m = 2 * n;
    if m > MAX_COMMUTANT_ORDER {
        return Err(AugmentedError::TooLarge { got: m, max: MAX_COMMUTANT_ORDER });
    }
    let a = build_hat_flux(hat, gamma)?;
    let id = RMat::identity(m, m);
    // vec(XA - AX) = (Aᵀ⊗I - I⊗A)·vec(X), column-major vectorization.
    let big = a.transpose().kronecker(&id) - id.kronecker(&a);
    let ns = nullspace(&big, 1e-8)?;
    let basis = ns
        .basis
        .iter()
        .map(|col| RMat::from_column_slice(m, m, col.as_slice()))
        .collect();
    Ok((ns.dim, basis))
}

/// Distance of `x` from the span of `basis`, relative to ‖x‖; the basis
/// must be orthonormal under vectorization (as `frobenius_commutant`
/// returns it).
pub fn span_projection_residual(basis: &[RMat], x: &RMat) -> f64 {
    let scale = x.norm();
    if scale == 0.0 {
        return 0.0;
    }
    let vx = RVec::from_column_slice(x.as_slice());
    let mut rem = vx.clone();
    for b in basis {
        let vb = RVec::from_column_slice(b.as_slice());
        let coeff = vb.dot(&vx);
        rem -= vb * coeff;
    }
    rem.norm() / scale
}

/// Sampled velocity/vorticity fields on a uniform grid; entry (i, j) of a
/// layer matrix is the sample at (i·dx, j·dy).
#[derive(Debug, Clone)]
pub struct LayerSamples {
    pub u: RMat,
    pub v: RMat,
    pub w: RMat,
}

#[derive(Debug, Clone)]
pub struct GridField {
    dx: f64,
    dy: f64,
    layers: Vec<LayerSamples>,
}

impl GridField {
    pub fn new(dx: f64, dy: f64, layers: Vec<LayerSamples>) -> Result<Self, AugmentedError> {
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(AugmentedError::InvalidInput(
                "grid spacings must be finite and positive".into(),
            ));
        }
        let Some(first) = layers.first() else {
            return Err(AugmentedError::InvalidInput("grid needs at least one layer".into()));
        };
        let (nx, ny) = first.u.shape();
        if nx < 3 || ny < 3 {
            return Err(AugmentedError::InvalidInput(
                "grid needs at least 3 samples per axis for interior differences".into(),
            ));
        }
        for layer in &layers {
            for m in [&layer.u, &layer.v, &layer.w] {
                if m.shape() != (nx, ny) {
                    return Err(AugmentedError::InvalidInput(
                        "all layer sample arrays must share one grid shape".into(),
                    ));
                }
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(AugmentedError::InvalidInput(
                        "grid samples must be finite".into(),
                    ));
                }
            }
        }
        Ok(Self { dx, dy, layers })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.layers[0].u.shape()
    }

    pub fn layers(&self) -> &[LayerSamples] {
        &self.layers
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }
}

/// Per-layer maximum of |w − (∂v/∂x − ∂u/∂y)| over interior grid points,
/// with second-order central differences. Zero (to rounding) exactly when
/// the vorticity samples are compatible with the velocity field.
pub fn vorticity_compatibility(field: &GridField) -> Vec<f64> {
    let (nx, ny) = field.shape();
    let (dx, dy) = field.spacing();
    field
        .layers()
        .iter()
        .map(|layer| {
            let mut worst = 0.0f64;
            for i in 1..nx - 1 {
                for j in 1..ny - 1 {
                    let curl = (layer.v[(i + 1, j)] - layer.v[(i - 1, j)]) / (2.0 * dx)
                        - (layer.u[(i, j + 1)] - layer.u[(i, j - 1)]) / (2.0 * dy);
                    worst = worst.max((layer.w[(i, j)] - curl).abs());
                }
            }
            worst
        })
        .collect()
}

/// Relative step for difference quotients of eigenvalue functions.
const FD_REL_STEP: f64 = 1e-6;

/// Lift gaps below this fraction of the spectral radius count as degenerate.
const DEGENERATE_GAP_REL: f64 = 1e-10;

/// Kernel cutoff for the stationary eigenspace, relative to the largest
/// singular value.
const NULLSPACE_TOL: f64 = 1e-10;

/// Base-model wave pair (value, right, left) backing a lift. Baroclinic
/// labels need a stratification fit; barotropic ones fall back to the
/// first-order mode without it.
fn base_wave_pair(
    label: WaveLabel,
    state: &State,
    gamma: &DensityRatios,
) -> Result<(f64, RVec, RVec), AugmentedError> {
    match label {
        WaveLabel::BarotropicPlus | WaveLabel::BarotropicMinus => {
            let sign = if label == WaveLabel::BarotropicPlus { Sign::Plus } else { Sign::Minus };
            let fitted = fit_regime(state, gamma).ok();
            let scheme = fitted.as_ref();
            let (plus, minus) = match scheme {
                Some(s) => barotropic_eig(state, gamma, BarotropicMode::Regime(s))?,
                None => barotropic_eig(state, gamma, BarotropicMode::FirstOrder)?,
            };
            let value = if sign == Sign::Plus { plus } else { minus };
            let (right, left) = barotropic_eigvecs(state, gamma, scheme, sign)?;
            Ok((value, right, left))
        }
        WaveLabel::BaroclinicPlus(i) | WaveLabel::BaroclinicMinus(i) => {
            let sign = if matches!(label, WaveLabel::BaroclinicPlus(_)) {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let scheme = fit_regime(state, gamma)
                .map_err(|e| AugmentedError::InvalidInput(e.to_string()))?;
            let support = interface_support(i, &scheme, state.h())
                .map_err(|e| AugmentedError::InvalidInput(e.to_string()))?;
            let pair = baroclinic_eig(i, state, gamma, &support)?;
            if !pair.is_real() {
                return Err(AugmentedError::InvalidInput(format!(
                    "interface {i} carries a complex pair; no real eigenvector to lift"
                )));
            }
            let value = if sign == Sign::Plus { pair.plus.re } else { pair.minus.re };
            let (right, left) = baroclinic_eigvecs(i, state, gamma, &support, sign)?;
            Ok((value, right, left))
        }
        _ => unreachable!("callers dispatch wave labels only"),
    }
}

/// Right and left eigenvectors of A^a_x for one labeled family.
///
/// Wave families embed the base-model pair (the first 3n slots keep their
/// meaning) and add the coupling corrections: the right vector takes
/// (w_k+f)/(λ−u_k) times the velocity slot in the vorticity slots, the left
/// one takes v_k/λ times the velocity slot in the transverse slots. Both
/// corrections solve their rows exactly, so the lifted residual matches the
/// base residual. Terms with zero numerator are dropped before the gap
/// check; with w+f ≡ 0 the lift adds nothing.
///
/// The vortical and stationary families are closed-form. The stationary
/// right vector exists in two shapes: the transverse unit vector when
/// v_i = 0, and otherwise a vector whose transverse slots divide by v_l
/// layer by layer, so it needs every v_l nonzero.
pub fn augmented_eigvecs(
    label: WaveLabel,
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
) -> Result<(RVec, RVec), AugmentedError> {
    let n = check_dims(aug, gamma)?;
    let st = aug.base();
    let check_layer = |i: usize| {
        if i >= n {
            return Err(AugmentedError::InvalidInput(format!(
                "layer {i} out of range for {n} layers"
            )));
        }
        Ok(())
    };
    match label {
        WaveLabel::Vortical(i) => {
            check_layer(i)?;
            let mut right = RVec::zeros(4 * n);
            right[3 * n + i] = 1.0;
            let mut left = RVec::zeros(4 * n);
            left[i] = -(aug.w()[i] + f);
            left[3 * n + i] = st.h()[i];
            Ok((right, left))
        }
        WaveLabel::Zero(i) => {
            check_layer(i)?;
            let mut left = RVec::zeros(4 * n);
            left[2 * n + i] = 1.0;
            if st.v()[i] == 0.0 {
                let mut right = RVec::zeros(4 * n);
                right[2 * n + i] = 1.0;
                return Ok((right, left));
            }
            if let Some(k) = (0..n).find(|&k| st.v()[k] == 0.0) {
                return Err(AugmentedError::InvalidInput(format!(
                    "stationary family of layer {i}: v_{i} is nonzero but v_{k} vanishes, \
                     and the null vector couples every layer through 1/v"
                )));
            }
            // Null vector with a moving transverse slot: the height and
            // velocity slots cancel the layer-i rows, the transverse slots
            // absorb the coupling column Γ·e_i, the vorticity slot closes
            // the w row.
            let gm = build_gamma_matrix(gamma);
            let (h_i, u_i) = (st.h()[i], st.u()[i]);
            let mut right = RVec::zeros(4 * n);
            right[i] = h_i;
            right[n + i] = -u_i;
            for l in 0..n {
                let num =
                    if l == i { u_i * u_i - h_i * gm[(l, i)] } else { -h_i * gm[(l, i)] };
                right[2 * n + l] = num / st.v()[l];
            }
            right[3 * n + i] = aug.w()[i] + f;
            Ok((right, left))
        }
        WaveLabel::BarotropicPlus
        | WaveLabel::BarotropicMinus
        | WaveLabel::BaroclinicPlus(_)
        | WaveLabel::BaroclinicMinus(_) => {
            let (lambda, base_r, base_l) = base_wave_pair(label, st, gamma)?;
            let rho = spectral_radius(&build_aa_x(aug, gamma, f)?)?;
            let gap_tol = DEGENERATE_GAP_REL * rho;
            let mut right = RVec::zeros(4 * n);
            let mut left = RVec::zeros(4 * n);
            for j in 0..3 * n {
                right[j] = base_r[j];
                left[j] = base_l[j];
            }
            for k in 0..n {
                let wnum = (aug.w()[k] + f) * base_r[n + k];
                if wnum != 0.0 {
                    let gap = lambda - st.u()[k];
                    if gap.abs() < gap_tol {
                        return Err(AugmentedError::DegenerateLift {
                            lambda,
                            pivot: st.u()[k],
                            layer: k,
                        });
                    }
                    right[3 * n + k] = wnum / gap;
                }
                let vnum = st.v()[k] * base_l[n + k];
                if vnum != 0.0 {
                    if lambda.abs() < gap_tol {
                        return Err(AugmentedError::DegenerateLift {
                            lambda,
                            pivot: 0.0,
                            layer: k,
                        });
                    }
                    left[2 * n + k] = vnum / lambda;
                }
            }
            Ok((right, left))
        }
        _ => Err(AugmentedError::InvalidInput(format!(
            "label {label:?} has no family in the augmented model"
        ))),
    }
}

/// Combined well-posedness verdict of the augmented model at one state.
#[derive(Debug, Clone)]
pub struct AugmentedVerdict {
    pub symmetrizable: bool,
    /// Margin of the augmented symmetrizer criterion (singleton when the
    /// structural checks pass, empty otherwise).
    pub margins: Vec<f64>,
    pub numeric: NumericVerdict,
    /// Largest |Im λ| over the direction grid.
    pub max_imag: f64,
    /// Worst eigenvector-matrix condition number over the grid.
    pub eigvec_cond: f64,
    /// Largest |∇λ·r| over the vortical families; exactly zero because the
    /// advective eigenvalue has no vorticity component in its gradient.
    pub vortical_fd_max: f64,
    /// Largest |∇λ·q| over an orthonormal basis of the stationary
    /// eigenspace; the stationary eigenvalue persists under every state
    /// perturbation, so this measures solver noise only.
    pub zero_fd_max: f64,
}

fn augmented_coords(aug: &AugmentedState) -> Vec<f64> {
    let st = aug.base();
    let mut x = Vec::with_capacity(4 * st.n());
    x.extend_from_slice(st.h());
    x.extend_from_slice(st.u());
    x.extend_from_slice(st.v());
    x.extend_from_slice(aug.w());
    x
}

fn augmented_from_coords(x: &[f64]) -> Result<AugmentedState, AugmentedError> {
    let n = x.len() / 4;
    let base = State::new(x[..n].to_vec(), x[n..2 * n].to_vec(), x[2 * n..3 * n].to_vec())?;
    Ok(AugmentedState::new(base, x[3 * n..].to_vec())?)
}

/// Difference quotient of the smallest-modulus eigenvalue over all 4n state
/// coordinates. The stationary family keeps that eigenvalue at zero for
/// every admissible state, so the result is rounding noise by construction.
fn stationary_gradient(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
) -> Result<RVec, AugmentedError> {
    let x = augmented_coords(aug);
    let m = x.len();
    let mut grad = RVec::zeros(m);
    let smallest = |y: &[f64]| -> Result<f64, AugmentedError> {
        let a = build_aa_x(&augmented_from_coords(y)?, gamma, f)?;
        let dec = eig_dense(&a)?;
        let z = dec
            .values
            .iter()
            .min_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("spectrum is nonempty");
        Ok(z.re)
    };
    for k in 0..m {
        let s = FD_REL_STEP * (1.0 + x[k].abs());
        let mut up = x.clone();
        up[k] += s;
        let mut down = x.clone();
        down[k] -= s;
        grad[k] = (smallest(&up)? - smallest(&down)?) / (2.0 * s);
    }
    Ok(grad)
}

/// Symmetrizability, directional spectrum, and degenerate-family checks of
/// the augmented model. `u0` is the reference velocity of the symmetrizer
/// criterion; component means of the layer velocities are the usual choice.
/// Only the direction-grid fields of `options` are consulted.
pub fn classify_augmented(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
    u0: [f64; 2],
    options: &ClassifyOptions,
) -> Result<AugmentedVerdict, AugmentedError> {
    let n = check_dims(aug, gamma)?;
    if options.theta_samples == 0 {
        return Err(AugmentedError::InvalidInput(
            "direction grid needs at least one sample".into(),
        ));
    }
    let sym = check_symmetrizable_augmented(aug, gamma, u0, f)?;

    let mut max_imag = 0.0f64;
    let mut worst_cond = 0.0f64;
    let mut complex_found = false;
    for k in 0..options.theta_samples {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / options.theta_samples as f64;
        let a = build_aa_theta(aug, gamma, f, theta)?;
        let dec = eig_dense(&a)?;
        let rho = dec.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let imag = dec.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        max_imag = max_imag.max(imag);
        if imag > options.tol_im * rho {
            complex_found = true;
        }
        let v = CMat::from_columns(&dec.right);
        worst_cond = worst_cond.max(cond2_complex(&v));
    }
    let numeric = if complex_found {
        NumericVerdict::NonHyperbolic
    } else if worst_cond > options.cond_cap {
        NumericVerdict::HyperbolicNondiagonalizableSuspect
    } else {
        NumericVerdict::HyperbolicDiagonalizable
    };

    // Vortical families: λ = u_i is a coordinate function, so its difference
    // quotient misses the vorticity slot the eigenvector lives in.
    let x = augmented_coords(aug);
    let mut vortical_fd_max = 0.0f64;
    for i in 0..n {
        let mut grad = RVec::zeros(4 * n);
        for k in 0..4 * n {
            let s = FD_REL_STEP * (1.0 + x[k].abs());
            let up = if k == n + i { x[k] + s } else { x[k] };
            let down = if k == n + i { x[k] - s } else { x[k] };
            grad[k] = (up - down) / (2.0 * s);
        }
        let mut r = RVec::zeros(4 * n);
        r[3 * n + i] = 1.0;
        vortical_fd_max = vortical_fd_max.max(grad.dot(&r).abs());
    }

    // Stationary families: measure against an orthonormal kernel basis so
    // the verdict does not depend on any eigenvector normalization choice.
    let grad = stationary_gradient(aug, gamma, f)?;
    let kernel = nullspace(&build_aa_x(aug, gamma, f)?, NULLSPACE_TOL)?;
    let mut zero_fd_max = 0.0f64;
    for q in &kernel.basis {
        zero_fd_max = zero_fd_max.max(grad.dot(q).abs());
    }

    Ok(AugmentedVerdict {
        symmetrizable: sym.symmetrizable,
        margins: sym.margins,
        numeric,
        max_imag,
        eigvec_cond: worst_cond,
        vortical_fd_max,
        zero_fd_max,
    })
}
