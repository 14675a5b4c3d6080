//! Explicit symmetrizers for the 3n model and the 4n vorticity-augmented
//! model, the minor/Gerschgorin machinery behind their positivity, and the
//! δ lower bounds of the first well-posedness criterion.
//!
//! All bounds here are sufficient conditions: the exact largest admissible
//! δ_i are never characterized, so verdicts are conservative.

use thiserror::Error;

use crate::model::{build_ax, AugmentedState, DensityRatios, ModelError, State};
use crate::numerics::{eig_dense, NumericsError, RMat};

#[derive(Debug, Error)]
pub enum SymmetrizerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A symmetrizer with its product checks.
#[derive(Debug, Clone)]
pub struct SymmetrizerBundle {
    /// The symmetrizer itself (symmetric by construction).
    pub s: RMat,
    /// Product S·A_x.
    pub sa_x: RMat,
    /// Product S·A_y; only populated for the augmented model, where the
    /// same S must symmetrize both directions.
    pub sa_y: Option<RMat>,
    /// Cholesky verdict on S.
    pub positive_definite: bool,
    /// Smallest eigenvalue of S.
    pub min_eigenvalue: f64,
    /// Largest relative asymmetry over the stored products.
    pub symmetry_defect: f64,
}

/// Lower bounds for the admissible velocity deviations δ_i.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaBounds {
    /// (λ_min(S_x⁰)/α_{n,i})², the sharper numeric bound.
    pub refined: Vec<f64>,
    /// 1/(α_{n,i}·a(h,γ))², the closed-form Gerschgorin bound.
    pub explicit: Vec<f64>,
    pub a_bound: f64,
}

/// Outcome of the velocity-deviation criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizabilityReport {
    pub symmetrizable: bool,
    /// True when all heights are positive and all ratios lie in (0, 1).
    pub structure_ok: bool,
    /// Per-layer margins δ_i − |u_i−ū|² − |v_i−v̄|²; empty when the
    /// structural check already failed.
    pub margins: Vec<f64>,
}

impl SymmetrizabilityReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn symmetry_defect(m: &RMat) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / scale
}

fn is_positive_definite(m: &RMat) -> bool {
    m.clone().cholesky().is_some()
}

fn min_real_eigenvalue(m: &RMat) -> Result<f64, NumericsError> {
    let dec = eig_dense(m)?;
    Ok(dec.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// The rest-state symmetrizer S_x⁰ = blockdiag(ΔΓ, ΔH, ΔH) with
/// Δ = diag(α_{n,i}); entry (i,k) of ΔΓ is α_{n,max(i,k)+1}... collapsed to
/// α_{n,min(i,k)} by the ratio product rule.
pub fn build_sx0(h: &[f64], gamma: &DensityRatios) -> Result<RMat, SymmetrizerError> {
    let n = gamma.n();
    if h.len() != n {
        return Err(SymmetrizerError::InvalidInput(format!(
            "expected {} heights, got {}",
            n,
            h.len()
        )));
    }
    let alpha = gamma.alpha_bottom();
    let mut s = RMat::zeros(3 * n, 3 * n);
    for i in 0..n {
        for k in 0..n {
            s[(i, k)] = alpha[i.min(k)];
        }
        s[(n + i, n + i)] = alpha[i] * h[i];
        s[(2 * n + i, 2 * n + i)] = alpha[i] * h[i];
    }
    Ok(s)
}

/// The symbolic symmetrizer S_x(u,γ,u₀) with velocity blocks Δ(V_x − u₀I);
/// its product with A_x is symmetric for every u₀.
pub fn build_sx(
    state: &State,
    gamma: &DensityRatios,
    u0: f64,
) -> Result<SymmetrizerBundle, SymmetrizerError> {
    let n = state.n();
    let mut s = build_sx0(state.h(), gamma)?;
    let alpha = gamma.alpha_bottom();
    for i in 0..n {
        let d = alpha[i] * (state.u()[i] - u0);
        s[(i, n + i)] = d;
        s[(n + i, i)] = d;
    }
    let ax = build_ax(state, gamma)?;
    let sa_x = &s * ax;
    Ok(SymmetrizerBundle {
        positive_definite: is_positive_definite(&s),
        min_eigenvalue: min_real_eigenvalue(&s)?,
        symmetry_defect: symmetry_defect(&sa_x),
        s,
        sa_x,
        sa_y: None,
    })
}

/// Closed-form leading principal minors of ΔΓ:
/// m_k = α_{n,1} ∏_{i<k} (α_{n,i+1} − α_{n,i}).
pub fn gamma_minors(gamma: &DensityRatios) -> Vec<f64> {
    let alpha = gamma.alpha_bottom();
    let n = alpha.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = alpha[0];
    out.push(acc);
    for i in 1..n {
        acc *= alpha[i] - alpha[i - 1];
        out.push(acc);
    }
    out
}

fn stable_p_weights(gamma: &DensityRatios) -> Result<Vec<f64>, SymmetrizerError> {
    if !gamma.strictly_stable() {
        return Err(SymmetrizerError::InvalidInput(
            "density ratios must lie strictly inside (0, 1)".into(),
        ));
    }
    let alpha = gamma.alpha_bottom();
    Ok(alpha.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect())
}

/// Gerschgorin bound a(h,γ) ≥ λ_max((S_x⁰)⁻¹): the maximum of
/// (α_{n,2}/α_{n,1} + 1)p₁, 2·max(p_k + p_{k+1}), and max 1/(α_{n,i}h_i).
pub fn gersh_bound_a(h: &[f64], gamma: &DensityRatios) -> Result<f64, SymmetrizerError> {
    let n = gamma.n();
    if h.len() != n || h.iter().any(|&x| x <= 0.0) {
        return Err(SymmetrizerError::InvalidInput(
            "heights must be strictly positive and match the layer count".into(),
        ));
    }
    let alpha = gamma.alpha_bottom();
    let p = stable_p_weights(gamma)?;
    let mut a = (0..n).map(|i| 1.0 / (alpha[i] * h[i])).fold(0.0f64, f64::max);
    if n >= 2 {
        a = a.max((alpha[1] / alpha[0] + 1.0) * p[0]);
    }
    for k in 0..n.saturating_sub(2) {
        a = a.max(2.0 * (p[k] + p[k + 1]));
    }
    Ok(a)
}

/// Closed-form inverse of ΔΓ: a symmetric tridiagonal matrix with diagonal
/// ((α_{n,2}/α_{n,1})p₁, p₁+p₂, …, p_{n−2}+p_{n−1}, p_{n−1}) and all
/// off-diagonal entries −p_k.
pub fn tridiag_inverse_gamma(
    gamma: &DensityRatios,
) -> Result<(Vec<f64>, Vec<f64>), SymmetrizerError> {
    let n = gamma.n();
    if n == 1 {
        return Ok((vec![1.0], vec![]));
    }
    let alpha = gamma.alpha_bottom();
    let p = stable_p_weights(gamma)?;
    let mut diag = Vec::with_capacity(n);
    diag.push(alpha[1] / alpha[0] * p[0]);
    for i in 1..n - 1 {
        diag.push(p[i - 1] + p[i]);
    }
    diag.push(p[n - 2]);
    let offdiag: Vec<f64> = p.iter().map(|x| -x).collect();
    Ok((diag, offdiag))
}

/// Lower bounds on the admissible squared velocity deviations, per layer.
pub fn delta_bounds(h: &[f64], gamma: &DensityRatios) -> Result<DeltaBounds, SymmetrizerError> {
    let a = gersh_bound_a(h, gamma)?;
    let s0 = build_sx0(h, gamma)?;
    let lam_min = min_real_eigenvalue(&s0)?;
    let alpha = gamma.alpha_bottom();
    let refined = alpha.iter().map(|al| (lam_min / al) * (lam_min / al)).collect();
    let explicit = alpha.iter().map(|al| 1.0 / (al * a * al * a)).collect();
    Ok(DeltaBounds { refined, explicit, a_bound: a })
}

fn verdict(structure_ok: bool, margins: &[f64]) -> bool {
    structure_ok && !margins.is_empty() && margins.iter().all(|&m| m > 0.0)
}

/// Velocity-deviation criterion at the mean-velocity reference frame:
/// symmetrizable when every δ_i − |u_i−ū|² − |v_i−v̄|² is strictly positive.
pub fn check_symmetrizable(
    state: &State,
    gamma: &DensityRatios,
) -> Result<SymmetrizabilityReport, SymmetrizerError> {
    if state.n() != gamma.n() {
        return Err(SymmetrizerError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            state.n(),
            gamma.n()
        )));
    }
    let structure_ok = state.h().iter().all(|&x| x > 0.0) && gamma.strictly_stable();
    if !structure_ok {
        return Ok(SymmetrizabilityReport {
            symmetrizable: false,
            structure_ok,
            margins: vec![],
        });
    }
    let bounds = delta_bounds(state.h(), gamma)?;
    let ubar = state.u_mean();
    let vbar = state.v_mean();
    let margins: Vec<f64> = (0..state.n())
        .map(|i| {
            let du = state.u()[i] - ubar;
            let dv = state.v()[i] - vbar;
            bounds.refined[i] - du * du - dv * dv
        })
        .collect();
    Ok(SymmetrizabilityReport {
        symmetrizable: verdict(structure_ok, &margins),
        structure_ok,
        margins,
    })
}

/// The Friedrichs symmetrizer of the augmented model, W = diag(w_i + f):
/// [[ΔΓ+W², ΔV_x, ΔV_y, −WH], [ΔV_x, ΔH, 0, 0], [ΔV_y, 0, ΔH, 0],
/// [−WH, 0, 0, H²]]. One matrix symmetrizes both directions.
pub fn build_sa(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    f: f64,
) -> Result<SymmetrizerBundle, SymmetrizerError> {
    let state = aug.base();
    let n = state.n();
    if n != gamma.n() {
        return Err(SymmetrizerError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            n,
            gamma.n()
        )));
    }
    let alpha = gamma.alpha_bottom();
    let mut s = RMat::zeros(4 * n, 4 * n);
    for i in 0..n {
        let wt = aug.w()[i] + f;
        let h = state.h()[i];
        for k in 0..n {
            s[(i, k)] = alpha[i.min(k)];
        }
        s[(i, i)] += wt * wt;
        s[(i, n + i)] = alpha[i] * state.u()[i];
        s[(n + i, i)] = alpha[i] * state.u()[i];
        s[(i, 2 * n + i)] = alpha[i] * state.v()[i];
        s[(2 * n + i, i)] = alpha[i] * state.v()[i];
        s[(i, 3 * n + i)] = -wt * h;
        s[(3 * n + i, i)] = -wt * h;
        s[(n + i, n + i)] = alpha[i] * h;
        s[(2 * n + i, 2 * n + i)] = alpha[i] * h;
        s[(3 * n + i, 3 * n + i)] = h * h;
    }
    let lift = |e: crate::augmented::AugmentedError| SymmetrizerError::InvalidInput(e.to_string());
    let ax = crate::augmented::build_aa_x(aug, gamma, f).map_err(lift)?;
    let ay = crate::augmented::build_aa_y(aug, gamma, f).map_err(lift)?;
    let sa_x = &s * ax;
    let sa_y = &s * ay;
    Ok(SymmetrizerBundle {
        positive_definite: is_positive_definite(&s),
        min_eigenvalue: min_real_eigenvalue(&s)?,
        symmetry_defect: symmetry_defect(&sa_x).max(symmetry_defect(&sa_y)),
        s,
        sa_x,
        sa_y: Some(sa_y),
    })
}

/// The scalar criterion δ^a of the augmented model:
/// min(a⁻¹, min h_i²) − max α_{n,i}|u_i−u₀| − max α_{n,i}|v_i−v₀|
/// + min(0, min_i λ₋(i)), with λ₋(i) = (w̃² − |w̃|√(w̃² + 4h_i²))/2 the
/// negative eigenvalue of the vorticity coupling block (the |w̃| keeps the
/// expression the negative branch for either sign of w̃ = w_i + f).
pub fn delta_a(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    u0: [f64; 2],
    f: f64,
) -> Result<f64, SymmetrizerError> {
    let state = aug.base();
    let a = gersh_bound_a(state.h(), gamma)?;
    let alpha = gamma.alpha_bottom();
    let h_min_sq = state.h().iter().map(|h| h * h).fold(f64::INFINITY, f64::min);
    let du = (0..state.n())
        .map(|i| alpha[i] * (state.u()[i] - u0[0]).abs())
        .fold(0.0f64, f64::max);
    let dv = (0..state.n())
        .map(|i| alpha[i] * (state.v()[i] - u0[1]).abs())
        .fold(0.0f64, f64::max);
    let vort = (0..state.n())
        .map(|i| {
            let wt = aug.w()[i] + f;
            let h = state.h()[i];
            0.5 * (wt * wt - wt.abs() * (wt * wt + 4.0 * h * h).sqrt())
        })
        .fold(0.0f64, f64::min);
    Ok((1.0 / a).min(h_min_sq) - du - dv + vort)
}

/// Augmented-model verdict: δ^a > 0 with positive heights and stable ratios.
pub fn check_symmetrizable_augmented(
    aug: &AugmentedState,
    gamma: &DensityRatios,
    u0: [f64; 2],
    f: f64,
) -> Result<SymmetrizabilityReport, SymmetrizerError> {
    let structure_ok =
        aug.base().h().iter().all(|&x| x > 0.0) && gamma.strictly_stable();
    if !structure_ok {
        return Ok(SymmetrizabilityReport {
            symmetrizable: false,
            structure_ok,
            margins: vec![],
        });
    }
    let d = delta_a(aug, gamma, u0, f)?;
    Ok(SymmetrizabilityReport {
        symmetrizable: d > 0.0,
        structure_ok,
        margins: vec![d],
    })
}
