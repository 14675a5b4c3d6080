//! Physical state, density ratios, and the system matrices of the n-layer
//! free-surface shallow water model.
//!
//! Heights are stored already multiplied by the gravitational acceleration
//! (units m²/s²); [`rescale_physical`] is the single conversion entry point.
//! Builders accept degenerate data (zero heights, unit density ratios) so
//! that limit cases remain constructible; positivity requirements live in
//! the classification routines.

use thiserror::Error;

use crate::numerics::{RMat, RVec};

/// Errors from state construction and matrix assembly.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

/// Layer state ᵀ(h₁..h_n, u₁..u_n, v₁..v_n) with g-rescaled heights.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    h: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl State {
    /// Builds a state from rescaled heights and velocities.
    ///
    /// Heights may be zero but not negative; every component must be finite.
    pub fn new(h: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self, ModelError> {
        if h.is_empty() {
            return Err(ModelError::InvalidValue("at least one layer required".into()));
        }
        if h.len() != u.len() || h.len() != v.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "h, u, v must have equal lengths (got {}, {}, {})",
                h.len(),
                u.len(),
                v.len()
            )));
        }
        for (name, xs) in [("h", &h), ("u", &u), ("v", &v)] {
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::InvalidValue(format!("non-finite entry in {name}")));
            }
        }
        if h.iter().any(|&x| x < 0.0) {
            return Err(ModelError::InvalidValue("negative layer height".into()));
        }
        Ok(Self { h, u, v })
    }

    /// State at rest: given heights, zero velocities.
    pub fn rest(h: Vec<f64>) -> Result<Self, ModelError> {
        let n = h.len();
        Self::new(h, vec![0.0; n], vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Total depth H = Σ h_i.
    pub fn total_depth(&self) -> f64 {
        self.h.iter().sum()
    }

    /// Depth-weighted mean x-velocity ū = (1/H) Σ h_i u_i; zero when H = 0.
    pub fn u_mean(&self) -> f64 {
        let hh = self.total_depth();
        if hh == 0.0 {
            return 0.0;
        }
        self.h.iter().zip(&self.u).map(|(h, u)| h * u).sum::<f64>() / hh
    }

    /// Depth-weighted mean y-velocity v̄ = (1/H) Σ h_i v_i; zero when H = 0.
    pub fn v_mean(&self) -> f64 {
        let hh = self.total_depth();
        if hh == 0.0 {
            return 0.0;
        }
        self.h.iter().zip(&self.v).map(|(h, v)| h * v).sum::<f64>() / hh
    }

    /// Flattens to the 3n coordinate vector ᵀ(h, u, v).
    pub fn to_vector(&self) -> RVec {
        let n = self.n();
        let mut out = RVec::zeros(3 * n);
        for i in 0..n {
            out[i] = self.h[i];
            out[n + i] = self.u[i];
            out[2 * n + i] = self.v[i];
        }
        out
    }

    /// Inverse of [`to_vector`](Self::to_vector); rejects non-finite entries
    /// but allows negative heights so perturbed states can round-trip.
    pub fn from_vector(x: &RVec) -> Result<Self, ModelError> {
        if x.len() % 3 != 0 || x.is_empty() {
            return Err(ModelError::DimensionMismatch(format!(
                "coordinate vector length {} is not a positive multiple of 3",
                x.len()
            )));
        }
        let n = x.len() / 3;
        if x.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::InvalidValue("non-finite coordinate".into()));
        }
        Ok(Self {
            h: (0..n).map(|i| x[i]).collect(),
            u: (0..n).map(|i| x[n + i]).collect(),
            v: (0..n).map(|i| x[2 * n + i]).collect(),
        })
    }
}

/// Successive density ratios γ_i = ρ_i/ρ_{i+1} for layers numbered from the
/// free surface down; stable stratification means every γ_i < 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRatios {
    gamma: Vec<f64>,
}

impl DensityRatios {
    /// Builds from ratios; each must be finite and strictly positive.
    /// Values ≥ 1 are accepted so degenerate (merged-layer) cases stay
    /// constructible.
    pub fn new(gamma: Vec<f64>) -> Result<Self, ModelError> {
        if gamma.iter().any(|&g| !g.is_finite() || g <= 0.0) {
            return Err(ModelError::InvalidValue(
                "density ratios must be finite and strictly positive".into(),
            ));
        }
        Ok(Self { gamma })
    }

    /// Builds from layer densities ρ₁..ρ_n (top to bottom), all positive.
    pub fn from_densities(rho: &[f64]) -> Result<Self, ModelError> {
        if rho.is_empty() {
            return Err(ModelError::InvalidValue("at least one density required".into()));
        }
        if rho.iter().any(|&r| !r.is_finite() || r <= 0.0) {
            return Err(ModelError::InvalidValue(
                "densities must be finite and strictly positive".into(),
            ));
        }
        let gamma = rho.windows(2).map(|w| w[0] / w[1]).collect();
        Self::new(gamma)
    }

    /// Layer count n = len(γ) + 1.
    pub fn n(&self) -> usize {
        self.gamma.len() + 1
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Ratio α_{i,k} = ρ_k/ρ_i = ∏_{j=k}^{i−1} γ_j for k < i, 1 otherwise.
    /// Zero-based layer indices.
    pub fn alpha(&self, i: usize, k: usize) -> f64 {
        if k >= i {
            return 1.0;
        }
        self.gamma[k..i].iter().product()
    }

    /// The row (α_{n,1}, …, α_{n,n}) of ratios against the bottom layer.
    pub fn alpha_bottom(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.alpha(n - 1, i)).collect()
    }

    /// True when every ratio lies strictly inside (0, 1).
    pub fn strictly_stable(&self) -> bool {
        self.gamma.iter().all(|&g| g > 0.0 && g < 1.0)
    }
}

/// Vorticity-augmented state ᵀ(h, u, v, w).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    base: State,
    w: Vec<f64>,
}

impl AugmentedState {
    pub fn new(base: State, w: Vec<f64>) -> Result<Self, ModelError> {
        if w.len() != base.n() {
            return Err(ModelError::DimensionMismatch(format!(
                "expected {} vorticities, got {}",
                base.n(),
                w.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidValue("non-finite vorticity".into()));
        }
        Ok(Self { base, w })
    }

    pub fn base(&self) -> &State {
        &self.base
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }
}

/// External physical parameters: gravity, Coriolis parameter, bottom slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    pub f: f64,
    pub grad_b: [f64; 2],
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { g: 9.81, f: 0.0, grad_b: [0.0, 0.0] }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.g.is_finite() || self.g <= 0.0 {
            return Err(ModelError::InvalidValue("g must be finite and positive".into()));
        }
        if !self.f.is_finite() || self.grad_b.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidValue("non-finite physical parameter".into()));
        }
        Ok(())
    }
}

fn check_dims(state: &State, gamma: &DensityRatios) -> Result<usize, ModelError> {
    if state.n() != gamma.n() {
        return Err(ModelError::DimensionMismatch(format!(
            "state has {} layers but ratios describe {}",
            state.n(),
            gamma.n()
        )));
    }
    Ok(state.n())
}

/// The n×n coupling matrix Γ with Γ_{i,k} = α_{i,k} below the diagonal and
/// 1 on and above it.
pub fn build_gamma_matrix(gamma: &DensityRatios) -> RMat {
    let n = gamma.n();
    RMat::from_fn(n, n, |i, k| gamma.alpha(i, k))
}

/// The 3n×3n flux matrix in x: blocks [[V_x, H, 0], [Γ, V_x, 0], [0, 0, V_x]].
pub fn build_ax(state: &State, gamma: &DensityRatios) -> Result<RMat, ModelError> {
    let n = check_dims(state, gamma)?;
    let mut a = RMat::zeros(3 * n, 3 * n);
    let g = build_gamma_matrix(gamma);
    for i in 0..n {
        a[(i, i)] = state.u[i];
        a[(n + i, n + i)] = state.u[i];
        a[(2 * n + i, 2 * n + i)] = state.u[i];
        a[(i, n + i)] = state.h[i];
        for k in 0..n {
            a[(n + i, k)] = g[(i, k)];
        }
    }
    Ok(a)
}

/// The 3n×3n flux matrix in y: blocks [[V_y, 0, H], [0, V_y, 0], [Γ, 0, V_y]].
pub fn build_ay(state: &State, gamma: &DensityRatios) -> Result<RMat, ModelError> {
    let n = check_dims(state, gamma)?;
    let mut a = RMat::zeros(3 * n, 3 * n);
    let g = build_gamma_matrix(gamma);
    for i in 0..n {
        a[(i, i)] = state.v[i];
        a[(n + i, n + i)] = state.v[i];
        a[(2 * n + i, 2 * n + i)] = state.v[i];
        a[(i, 2 * n + i)] = state.h[i];
        for k in 0..n {
            a[(2 * n + i, k)] = g[(i, k)];
        }
    }
    Ok(a)
}

/// Directional flux matrix cosθ·A_x + sinθ·A_y.
pub fn build_a_theta(state: &State, gamma: &DensityRatios, theta: f64) -> Result<RMat, ModelError> {
    if !theta.is_finite() {
        return Err(ModelError::InvalidValue("non-finite angle".into()));
    }
    let ax = build_ax(state, gamma)?;
    let ay = build_ay(state, gamma)?;
    Ok(ax * theta.cos() + ay * theta.sin())
}

/// The 3n×3n rotation P(θ) = blockdiag(I, [[cI, sI], [−sI, cI]]); orthogonal,
/// P(θ)⁻¹ = ᵀP(θ) = P(−θ).
pub fn rotation_matrix(n: usize, theta: f64) -> RMat {
    let (s, c) = theta.sin_cos();
    let mut p = RMat::identity(3 * n, 3 * n);
    for i in 0..n {
        p[(n + i, n + i)] = c;
        p[(n + i, 2 * n + i)] = s;
        p[(2 * n + i, n + i)] = -s;
        p[(2 * n + i, 2 * n + i)] = c;
    }
    p
}

/// Applies P(θ) to the state: heights fixed, velocities rotated into the
/// frame whose x-axis points along direction θ.
pub fn rotate_state(state: &State, theta: f64) -> State {
    let (s, c) = theta.sin_cos();
    let u: Vec<f64> = state.u.iter().zip(&state.v).map(|(u, v)| c * u + s * v).collect();
    let v: Vec<f64> = state.u.iter().zip(&state.v).map(|(u, v)| -s * u + c * v).collect();
    State { h: state.h.clone(), u, v }
}

/// Source vector ᵀ(0, …, 0, −f v_i + ∂b/∂x, …, f u_i + ∂b/∂y, …).
pub fn source_term(state: &State, params: &PhysicalParams) -> RVec {
    let n = state.n();
    let mut b = RVec::zeros(3 * n);
    for i in 0..n {
        b[n + i] = -params.f * state.v[i] + params.grad_b[0];
        b[2 * n + i] = params.f * state.u[i] + params.grad_b[1];
    }
    b
}

/// Velocity components entering an energy: x only, or both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    /// e₁: kinetic term u_i² only.
    Planar,
    /// e₂: kinetic term u_i² + v_i².
    Full,
}

/// Total energy ½ Σ α_{n,i} h_i (|u_i|² + h_i) + Σ_{i<j} α_{n,i} h_i h_j,
/// with |u_i|² chosen by `kind`.
pub fn energy(state: &State, gamma: &DensityRatios, kind: EnergyKind) -> Result<f64, ModelError> {
    let n = check_dims(state, gamma)?;
    let alpha = gamma.alpha_bottom();
    let mut e = 0.0;
    for i in 0..n {
        let kin = match kind {
            EnergyKind::Planar => state.u[i] * state.u[i],
            EnergyKind::Full => state.u[i] * state.u[i] + state.v[i] * state.v[i],
        };
        e += 0.5 * alpha[i] * state.h[i] * (kin + state.h[i]);
        for j in i + 1..n {
            e += alpha[i] * state.h[i] * state.h[j];
        }
    }
    Ok(e)
}

/// Closed-form Hessian of the planar energy in the variables (h, u):
/// blocks [[ΔΓ, ΔV_x], [ΔV_x, ΔH]] with Δ = diag(α_{n,i}).
///
/// Entry (i,k) of ΔΓ collapses to α_{n,min(i,k)}.
pub fn e1_hessian(state: &State, gamma: &DensityRatios) -> Result<RMat, ModelError> {
    let n = check_dims(state, gamma)?;
    let alpha = gamma.alpha_bottom();
    let mut hess = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            hess[(i, k)] = alpha[i.min(k)];
        }
        hess[(i, n + i)] = alpha[i] * state.u[i];
        hess[(n + i, i)] = alpha[i] * state.u[i];
        hess[(n + i, n + i)] = alpha[i] * state.h[i];
    }
    Ok(hess)
}

/// Converts physical heights (meters) to the rescaled variables ĥ_i = g·h_i.
pub fn rescale_physical(h_physical: &[f64], g: f64) -> Result<Vec<f64>, ModelError> {
    if !g.is_finite() || g <= 0.0 {
        return Err(ModelError::InvalidValue("g must be finite and positive".into()));
    }
    if h_physical.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::InvalidValue("non-finite height".into()));
    }
    Ok(h_physical.iter().map(|h| h * g).collect())
}
