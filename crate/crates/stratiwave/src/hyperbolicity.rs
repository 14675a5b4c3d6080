//! Classification of a state against the three well-posedness routes:
//! explicit symmetrizer bounds, the per-interface regime criterion, and the
//! numeric directional spectrum. Also houses the exp-norm growth probe, the
//! genuine-nonlinearity test of each wave family, and parameter sweeps.
//!
//! Every verdict is a finite-dimensional statement about flux matrices; none
//! claims well-posedness of the underlying evolution problem. When routes
//! disagree the numeric one is treated as authoritative and the disagreement
//! is reported as a warning, never reconciled silently.

use rayon::prelude::*;
use thiserror::Error;

use crate::asymptotics::{
    baroclinic_eig, baroclinic_eigvecs, barotropic_eig, barotropic_eigvecs, AsymptoticsError,
    BarotropicMode, Sign,
};
use crate::charpoly::WaveLabel;
use crate::model::{build_a_theta, build_ax, DensityRatios, ModelError, State};
use crate::numerics::{
    cond2_complex, eig_dense, matrix_exp_growth, CMat, NumericsError, RVec,
};
use crate::stratification::{fit_regime, interface_support, phi_sigma, StratScheme};
use crate::symmetrizer::{check_symmetrizable, delta_bounds, SymmetrizerError};

#[derive(Debug, Error)]
pub enum HyperbolicityError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Symmetrizer(#[from] SymmetrizerError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
}

/// Outcome of the directional-spectrum route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericVerdict {
    HyperbolicDiagonalizable,
    /// Real spectrum, but the eigenvector matrix is too ill-conditioned to
    /// certify diagonalizability.
    HyperbolicNondiagonalizableSuspect,
    NonHyperbolic,
}

/// Tolerances of the numeric route; the criteria themselves are exact
/// statements, so every surrogate carries a declared threshold.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Uniform direction samples over [0, 2π).
    pub theta_samples: usize,
    /// Imaginary-part tolerance, relative to the spectral radius.
    pub tol_im: f64,
    /// Eigenvector-matrix condition cap for the diagonalizability verdict.
    pub cond_cap: f64,
    /// Optional exp-norm probe appended to the verdict.
    pub growth: Option<GrowthSpec>,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowthSpec {
    pub theta: f64,
    pub tau_max: f64,
    pub samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { theta_samples: 32, tol_im: 1e-8, cond_cap: 1e8, growth: None }
    }
}

/// Per-interface regime criterion: φ_σ,i minus both squared shears.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCriterion {
    pub holds: bool,
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HyperbolicityVerdict {
    pub symmetrizable: bool,
    /// Velocity-deviation margins per layer (refined bounds).
    pub symmetrizer_margins: Vec<f64>,
    /// None when no stratification scheme fits the ratios.
    pub asymptotic: Option<AsymptoticCriterion>,
    pub numeric: NumericVerdict,
    /// Largest |Im λ| over the direction grid.
    pub max_imag: f64,
    /// Worst eigenvector-matrix condition number over the grid.
    pub eigvec_cond: f64,
    pub growth_max_norm: Option<f64>,
    /// Route disagreements; the numeric verdict stays authoritative.
    pub warnings: Vec<String>,
}

fn check_dims(state: &State, gamma: &DensityRatios) -> Result<usize, HyperbolicityError> {
    if state.n() != gamma.n() {
        return Err(HyperbolicityError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            state.n(),
            gamma.n()
        )));
    }
    Ok(state.n())
}

/// Velocity-deviation margins from the explicit (Gerschgorin) delta bounds,
/// the strictly smaller budget the inclusion comparisons quantify over.
pub fn explicit_bound_margins(
    state: &State,
    gamma: &DensityRatios,
) -> Result<Vec<f64>, HyperbolicityError> {
    let n = check_dims(state, gamma)?;
    let bounds = delta_bounds(state.h(), gamma)?;
    let ubar = state.u_mean();
    let vbar = state.v_mean();
    Ok((0..n)
        .map(|i| {
            let du = state.u()[i] - ubar;
            let dv = state.v()[i] - vbar;
            bounds.explicit[i] - du * du - dv * dv
        })
        .collect())
}

/// Height floor under which the explicit symmetrizer budget is contained in
/// the per-interface regime criterion: ρ_i h_i ≥ (ρ_m / 2) ε^{σ(m)} with m
/// the weakest interface. Densities are reconstructed from the ratios with
/// the bottom layer normalized to one.
pub fn regime_height_floor_ok(
    state: &State,
    gamma: &DensityRatios,
    scheme: &StratScheme,
) -> Result<bool, HyperbolicityError> {
    let n = check_dims(state, gamma)?;
    if scheme.interfaces() + 1 != n {
        return Err(HyperbolicityError::InvalidInput(format!(
            "scheme describes {} interfaces, state has {}",
            scheme.interfaces(),
            n - 1
        )));
    }
    let mut rho = vec![1.0; n];
    for i in (0..n - 1).rev() {
        rho[i] = gamma.gamma()[i] * rho[i + 1];
    }
    let m = scheme.argmax_sigma();
    let floor = rho[m] / 2.0 * scheme.epsilon().powf(scheme.sigma()[m]);
    Ok((0..n).all(|i| rho[i] * state.h()[i] >= floor))
}

fn asymptotic_route(state: &State, gamma: &DensityRatios) -> Option<AsymptoticCriterion> {
    let scheme = fit_regime(state, gamma).ok()?;
    let n = state.n();
    let mut margins = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let support = interface_support(i, &scheme, state.h()).ok()?;
        let phi = phi_sigma(i, &support, gamma).ok()?;
        let du = state.u()[i + 1] - state.u()[i];
        let dv = state.v()[i + 1] - state.v()[i];
        margins.push(phi - du * du - dv * dv);
    }
    let holds = margins.iter().all(|&m| m > 0.0);
    Some(AsymptoticCriterion { holds, margins })
}

/// Evaluates all three routes on one state.
///
/// Analysis failures are verdict states, never errors: an unfittable scheme
/// leaves the regime route not-applicable, and a complex spectrum is the
/// non-hyperbolic verdict itself.
pub fn classify(
    state: &State,
    gamma: &DensityRatios,
    options: &ClassifyOptions,
) -> Result<HyperbolicityVerdict, HyperbolicityError> {
    check_dims(state, gamma)?;
    if options.theta_samples == 0 {
        return Err(HyperbolicityError::InvalidInput(
            "direction grid needs at least one sample".into(),
        ));
    }
    let sym = check_symmetrizable(state, gamma)?;
    let asymptotic = asymptotic_route(state, gamma);

    let mut max_imag = 0.0f64;
    let mut worst_cond = 0.0f64;
    let mut complex_found = false;
    for k in 0..options.theta_samples {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / options.theta_samples as f64;
        let a = build_a_theta(state, gamma, theta)?;
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

    let mut warnings = Vec::new();
    if let Some(criterion) = &asymptotic {
        if !criterion.holds && numeric != NumericVerdict::NonHyperbolic {
            warnings.push(
                "regime criterion fails while the sampled spectrum is real; \
                 the criterion is asymptotic and may not apply at this state"
                    .into(),
            );
        }
        if criterion.holds && numeric == NumericVerdict::NonHyperbolic {
            warnings.push(
                "regime criterion passes but the sampled spectrum is complex; \
                 the numeric route is authoritative"
                    .into(),
            );
        }
    }
    if sym.symmetrizable && numeric == NumericVerdict::NonHyperbolic {
        warnings.push(
            "symmetrizable state with a complex sampled spectrum; the numeric \
             route is authoritative"
                .into(),
        );
    }

    let growth_max_norm = match options.growth {
        None => None,
        Some(spec) => Some(growth_probe(state, gamma, spec.theta, spec.tau_max, spec.samples)?),
    };

    Ok(HyperbolicityVerdict {
        symmetrizable: sym.symmetrizable,
        symmetrizer_margins: sym.margins,
        asymptotic,
        numeric,
        max_imag,
        eigvec_cond: worst_cond,
        growth_max_norm,
        warnings,
    })
}

/// Largest sampled ‖exp(−iτ A(θ))‖₂ over τ ∈ [0, tau_max].
///
/// Bounded by the eigenvector condition number for diagonalizable real
/// spectra; grows like e^{|Im λ| τ} past a complex pair.
pub fn growth_probe(
    state: &State,
    gamma: &DensityRatios,
    theta: f64,
    tau_max: f64,
    samples: usize,
) -> Result<f64, HyperbolicityError> {
    check_dims(state, gamma)?;
    if !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(HyperbolicityError::InvalidInput(format!(
            "probe horizon must be positive and finite, got {tau_max}"
        )));
    }
    if samples < 2 {
        return Err(HyperbolicityError::InvalidInput(
            "probe needs at least two time samples".into(),
        ));
    }
    let a = build_a_theta(state, gamma, theta)?;
    let taus: Vec<f64> = (0..samples)
        .map(|k| tau_max * k as f64 / (samples - 1) as f64)
        .collect();
    Ok(matrix_exp_growth(&a, &taus)?.max_norm())
}

/// Characteristic-field nature of one eigenvalue family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldNature {
    GenuinelyNonlinear,
    LinearlyDegenerate,
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct WaveNatureEntry {
    pub label: WaveLabel,
    pub nature: FieldNature,
    /// ∇λ · r; None when eigenvalue tracking failed across a perturbation.
    pub derivative: Option<f64>,
    /// ‖∇λ‖·‖r‖, the scale the thresholds are relative to.
    pub scale: f64,
}

const FD_REL_STEP: f64 = 1e-6;
const TOL_LD_REL: f64 = 1e-8;
const TOL_GNL_REL: f64 = 1e-4;
/// Gradients below this (relative to 1 + ρ(A)) are eigensolver noise; a
/// constant eigenvalue is linearly degenerate by definition.
const GRAD_NOISE_REL: f64 = 1e-7;

fn classify_derivative(d: f64, grad_norm: f64, r_norm: f64, rho: f64) -> (FieldNature, f64) {
    let scale = grad_norm * r_norm;
    if grad_norm <= GRAD_NOISE_REL * (1.0 + rho) {
        return (FieldNature::LinearlyDegenerate, scale);
    }
    let nature = if d.abs() <= TOL_LD_REL * scale {
        FieldNature::LinearlyDegenerate
    } else if d.abs() >= TOL_GNL_REL * scale {
        FieldNature::GenuinelyNonlinear
    } else {
        FieldNature::Indeterminate
    };
    (nature, scale)
}

/// The asymptotic eigenpair a label refers to: predicted value and right
/// vector. Needs a scheme for every family except the single-layer-capable
/// barotropic pair.
fn labeled_prediction(
    label: WaveLabel,
    state: &State,
    gamma: &DensityRatios,
    scheme: Option<&StratScheme>,
) -> Result<(f64, RVec), HyperbolicityError> {
    let fitted;
    let scheme = match scheme {
        Some(s) => Some(s),
        None => match fit_regime(state, gamma) {
            Ok(s) => {
                fitted = s;
                Some(&fitted)
            }
            Err(_) => None,
        },
    };
    match label {
        WaveLabel::BarotropicPlus | WaveLabel::BarotropicMinus => {
            let sign = if label == WaveLabel::BarotropicPlus { Sign::Plus } else { Sign::Minus };
            let (plus, minus) = match scheme {
                Some(s) => barotropic_eig(state, gamma, BarotropicMode::Regime(s))?,
                None => barotropic_eig(state, gamma, BarotropicMode::FirstOrder)?,
            };
            let value = if sign == Sign::Plus { plus } else { minus };
            let (right, _) = barotropic_eigvecs(state, gamma, scheme, sign)?;
            Ok((value, right))
        }
        WaveLabel::BaroclinicPlus(i) | WaveLabel::BaroclinicMinus(i) => {
            let scheme = scheme.ok_or_else(|| {
                HyperbolicityError::InvalidInput(
                    "no stratification scheme fits these ratios".into(),
                )
            })?;
            let sign = if matches!(label, WaveLabel::BaroclinicPlus(_)) {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let support = interface_support(i, scheme, state.h())
                .map_err(|e| HyperbolicityError::InvalidInput(e.to_string()))?;
            let pair = baroclinic_eig(i, state, gamma, &support)?;
            if !pair.is_real() {
                return Err(HyperbolicityError::InvalidInput(format!(
                    "interface {i} carries a complex pair; no real characteristic field"
                )));
            }
            let value = if sign == Sign::Plus { pair.plus.re } else { pair.minus.re };
            let (right, _) = baroclinic_eigvecs(i, state, gamma, &support, sign)?;
            Ok((value, right))
        }
        _ => Err(HyperbolicityError::InvalidInput(format!(
            "label {label:?} has no tracked eigenvalue in the base model"
        ))),
    }
}

/// Genuine-nonlinearity test of one labeled family in the x direction.
///
/// Advective and vortical labels use the closed-form eigenvalue u_i, whose
/// finite differences are exact; the wave families track the dense
/// eigenvalue nearest the asymptotic prediction across each perturbation.
/// A perturbed eigenvalue jumping more than half the base spectral gap is a
/// tracking failure and yields an indeterminate entry.
pub fn wave_nature(
    label: WaveLabel,
    state: &State,
    gamma: &DensityRatios,
    scheme: Option<&StratScheme>,
) -> Result<WaveNatureEntry, HyperbolicityError> {
    let n = check_dims(state, gamma)?;
    if let WaveLabel::Advective(i) = label {
        if i >= n {
            return Err(HyperbolicityError::InvalidInput(format!(
                "layer {i} out of range for {n} layers"
            )));
        }
        // λ = u_i exactly: the gradient is e_{n+i} up to rounding in the
        // difference quotient, and the v-slot eigenvector kills it exactly.
        let x = state.to_vector();
        let mut grad = RVec::zeros(3 * n);
        for k in 0..3 * n {
            let s = FD_REL_STEP * (1.0 + x[k].abs());
            let up = if k == n + i { x[k] + s } else { x[k] };
            let down = if k == n + i { x[k] - s } else { x[k] };
            grad[k] = (up - down) / (2.0 * s);
        }
        let mut r = RVec::zeros(3 * n);
        r[2 * n + i] = 1.0;
        let d = grad.dot(&r);
        let rho = state.u().iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let (nature, scale) = classify_derivative(d, grad.norm(), 1.0, rho);
        return Ok(WaveNatureEntry { label, nature, derivative: Some(d), scale });
    }

    let (predicted, r) = labeled_prediction(label, state, gamma, scheme)?;
    let a = build_ax(state, gamma)?;
    let dec = eig_dense(&a)?;
    let rho = dec.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (base_idx, _) = dec
        .values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (a.re - predicted).hypot(a.im);
            let db = (b.re - predicted).hypot(b.im);
            da.total_cmp(&db)
        })
        .expect("spectrum is nonempty");
    let lambda0 = dec.values[base_idx];
    if lambda0.im.abs() > 1e-8 * (1.0 + rho) {
        return Err(HyperbolicityError::InvalidInput(format!(
            "label {label:?} matches a complex eigenvalue; no real characteristic field"
        )));
    }
    let gap = dec
        .values
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != base_idx)
        .map(|(_, z)| (z - lambda0).norm())
        .fold(f64::INFINITY, f64::min);

    let x = state.to_vector();
    let mut grad = RVec::zeros(3 * n);
    for k in 0..3 * n {
        let s = FD_REL_STEP * (1.0 + x[k].abs());
        let track = |x_pert: RVec| -> Option<f64> {
            let st = State::from_vector(&x_pert).ok()?;
            let values = eig_dense(&build_ax(&st, gamma).ok()?).ok()?.values;
            let nearest = values
                .iter()
                .min_by(|a, b| (*a - lambda0).norm().total_cmp(&(*b - lambda0).norm()))?;
            if (nearest - lambda0).norm() > 0.5 * gap {
                return None;
            }
            Some(nearest.re)
        };
        let mut up = x.clone();
        up[k] += s;
        let mut down = x.clone();
        down[k] -= s;
        match (track(up), track(down)) {
            (Some(a), Some(b)) => grad[k] = (a - b) / (2.0 * s),
            _ => {
                return Ok(WaveNatureEntry {
                    label,
                    nature: FieldNature::Indeterminate,
                    derivative: None,
                    scale: 0.0,
                })
            }
        }
    }
    let d = grad.dot(&r);
    let (nature, scale) = classify_derivative(d, grad.norm(), r.norm(), rho);
    Ok(WaveNatureEntry { label, nature, derivative: Some(d), scale })
}

/// Nature of every family of the x-direction spectrum: n advective entries,
/// the baroclinic pairs, and the barotropic pair.
pub fn wave_nature_spectrum(
    state: &State,
    gamma: &DensityRatios,
    scheme: Option<&StratScheme>,
) -> Result<Vec<WaveNatureEntry>, HyperbolicityError> {
    let n = check_dims(state, gamma)?;
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        out.push(wave_nature(WaveLabel::Advective(i), state, gamma, scheme)?);
    }
    for i in 0..n - 1 {
        out.push(wave_nature(WaveLabel::BaroclinicPlus(i), state, gamma, scheme)?);
        out.push(wave_nature(WaveLabel::BaroclinicMinus(i), state, gamma, scheme)?);
    }
    out.push(wave_nature(WaveLabel::BarotropicPlus, state, gamma, scheme)?);
    out.push(wave_nature(WaveLabel::BarotropicMinus, state, gamma, scheme)?);
    Ok(out)
}

/// One swept state coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateCoord {
    H(usize),
    U(usize),
    V(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct AxisSpec {
    pub coord: StateCoord,
    pub min: f64,
    pub max: f64,
    /// Grid points along the axis; 1 pins the coordinate at `min`.
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis1: f64,
    /// None for single-axis sweeps.
    pub axis2: Option<f64>,
    pub symmetrizable: bool,
    /// None when no scheme fits at that point.
    pub asymptotic: Option<bool>,
    pub numeric: NumericVerdict,
    pub max_imag: f64,
    /// Minimum regime margin when the fit applies, else the minimum
    /// symmetrizer margin; None when neither is defined.
    pub margin_min: Option<f64>,
}

const MAX_SWEEP_POINTS: usize = 1_000_000;

fn axis_values(spec: &AxisSpec, n: usize) -> Result<Vec<f64>, HyperbolicityError> {
    let idx = match spec.coord {
        StateCoord::H(i) | StateCoord::U(i) | StateCoord::V(i) => i,
    };
    if idx >= n {
        return Err(HyperbolicityError::InvalidInput(format!(
            "axis coordinate index {idx} out of range for {n} layers"
        )));
    }
    if !spec.min.is_finite() || !spec.max.is_finite() || spec.min > spec.max {
        return Err(HyperbolicityError::InvalidInput(format!(
            "axis bounds [{}, {}] invalid",
            spec.min, spec.max
        )));
    }
    if matches!(spec.coord, StateCoord::H(_)) && spec.min < 0.0 {
        return Err(HyperbolicityError::InvalidInput(
            "height axis cannot go negative".into(),
        ));
    }
    if spec.steps == 0 {
        return Err(HyperbolicityError::InvalidInput(
            "axis needs at least one grid point".into(),
        ));
    }
    if spec.steps == 1 {
        return Ok(vec![spec.min]);
    }
    let d = (spec.max - spec.min) / (spec.steps - 1) as f64;
    Ok((0..spec.steps).map(|k| spec.min + d * k as f64).collect())
}

fn set_coord(state: &State, coord: StateCoord, value: f64) -> Result<State, HyperbolicityError> {
    let mut h = state.h().to_vec();
    let mut u = state.u().to_vec();
    let mut v = state.v().to_vec();
    match coord {
        StateCoord::H(i) => h[i] = value,
        StateCoord::U(i) => u[i] = value,
        StateCoord::V(i) => v[i] = value,
    }
    Ok(State::new(h, u, v)?)
}

/// Classifies every point of a 1- or 2-axis grid over the base state.
///
/// Rows are row-major over (axis1, axis2) and deterministic; points are
/// evaluated concurrently.
pub fn sweep(
    base: &State,
    gamma: &DensityRatios,
    axes: &[AxisSpec],
    options: &ClassifyOptions,
) -> Result<Vec<SweepRow>, HyperbolicityError> {
    let n = check_dims(base, gamma)?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(HyperbolicityError::InvalidInput(format!(
            "sweep takes one or two axes, got {}",
            axes.len()
        )));
    }
    let first = axis_values(&axes[0], n)?;
    let second = match axes.get(1) {
        Some(spec) => Some(axis_values(spec, n)?),
        None => None,
    };
    let inner = second.as_ref().map_or(1, Vec::len);
    let total = first.len().checked_mul(inner).filter(|&t| t <= MAX_SWEEP_POINTS);
    let Some(total) = total else {
        return Err(HyperbolicityError::InvalidInput(format!(
            "grid exceeds {MAX_SWEEP_POINTS} points"
        )));
    };
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / inner, flat % inner);
            let mut state = set_coord(base, axes[0].coord, first[i])?;
            let axis2 = match (&second, axes.get(1)) {
                (Some(vals), Some(spec)) => {
                    state = set_coord(&state, spec.coord, vals[j])?;
                    Some(vals[j])
                }
                _ => None,
            };
            let verdict = classify(&state, gamma, options)?;
            let margin_min = match &verdict.asymptotic {
                Some(criterion) => criterion.margins.iter().copied().reduce(f64::min),
                None => verdict.symmetrizer_margins.iter().copied().reduce(f64::min),
            };
            Ok(SweepRow {
                axis1: first[i],
                axis2,
                symmetrizable: verdict.symmetrizable,
                asymptotic: verdict.asymptotic.map(|c| c.holds),
                numeric: verdict.numeric,
                max_imag: verdict.max_imag,
                margin_min,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ratios(g: &[f64]) -> DensityRatios {
        DensityRatios::new(g.to_vec()).unwrap()
    }

    fn quick() -> ClassifyOptions {
        ClassifyOptions { theta_samples: 8, ..ClassifyOptions::default() }
    }

    /// Two-layer state with prescribed squared shear as a fraction of the
    /// squared-speed budget (h₁+h₂)(1−γ).
    fn two_layer(frac: f64, eps: f64) -> (State, DensityRatios) {
        let phi = 2.0 * eps;
        let du = (frac * phi).sqrt();
        let st = State::new(vec![1.0, 1.0], vec![0.0, du], vec![0.0, 0.0]).unwrap();
        (st, ratios(&[1.0 - eps]))
    }

    #[test]
    fn rest_state_passes_all_routes() {
        let st = State::rest(vec![1.0, 0.8]).unwrap();
        let g = ratios(&[0.95]);
        let verdict = classify(&st, &g, &ClassifyOptions::default()).unwrap();
        assert!(verdict.symmetrizable);
        assert!(verdict.symmetrizer_margins.iter().all(|&m| m > 0.0));
        let criterion = verdict.asymptotic.unwrap();
        assert!(criterion.holds);
        assert!(criterion.margins.iter().all(|&m| m > 0.0));
        assert_eq!(verdict.numeric, NumericVerdict::HyperbolicDiagonalizable);
        assert!(verdict.warnings.is_empty());
        assert!(verdict.growth_max_norm.is_none());
    }

    #[test]
    fn supercritical_two_layer_fails_numeric_and_regime_routes() {
        let (st, g) = two_layer(2.0, 1e-3);
        let verdict = classify(&st, &g, &quick()).unwrap();
        assert_eq!(verdict.numeric, NumericVerdict::NonHyperbolic);
        assert!(!verdict.symmetrizable);
        let criterion = verdict.asymptotic.unwrap();
        assert!(!criterion.holds);
        assert!(criterion.margins[0] < 0.0);
        assert!(verdict.max_imag > 1e-3);
    }

    #[test]
    fn subcritical_two_layer_passes_regime_and_numeric_routes() {
        let (st, g) = two_layer(0.5, 1e-4);
        let verdict = classify(&st, &g, &quick()).unwrap();
        assert_eq!(verdict.numeric, NumericVerdict::HyperbolicDiagonalizable);
        let criterion = verdict.asymptotic.unwrap();
        assert!(criterion.holds);
        assert!(verdict.warnings.is_empty());
    }

    #[test]
    fn unfittable_ratios_leave_the_regime_route_not_applicable() {
        // Equal jumps give a non-injective exponent map; merged (γ=1) gives
        // no jump at all. Both must degrade to None, not an error.
        let st = State::rest(vec![1.0, 1.0, 1.0]).unwrap();
        let verdict = classify(&st, &ratios(&[0.9, 0.9]), &quick()).unwrap();
        assert!(verdict.asymptotic.is_none());
        let st2 = State::new(vec![1.0, 1.0], vec![0.2, 0.2], vec![0.0; 2]).unwrap();
        let verdict2 = classify(&st2, &ratios(&[1.0]), &quick()).unwrap();
        assert!(verdict2.asymptotic.is_none());
        assert!(!verdict2.symmetrizable);
    }

    #[test]
    fn growth_probe_explodes_past_the_complex_pair() {
        let (st, g) = two_layer(2.0, 1e-3);
        let a = build_ax(&st, &g).unwrap();
        let b = eig_dense(&a)
            .unwrap()
            .values
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        assert!(b > 0.0);
        let tau = 20.0 / b;
        let norm = growth_probe(&st, &g, 0.0, tau, 64).unwrap();
        assert!(norm > 1e6, "growth {norm:e} at tau {tau}");
    }

    #[test]
    fn growth_probe_is_monotonic_in_the_horizon_past_onset() {
        let (st, g) = two_layer(2.0, 1e-3);
        let mut last = 0.0;
        for tau_max in [200.0, 400.0, 800.0] {
            let norm = growth_probe(&st, &g, 0.0, tau_max, 48).unwrap();
            assert!(norm > last, "norm {norm} not above {last} at {tau_max}");
            last = norm;
        }
    }

    #[test]
    fn growth_probe_stays_below_eigvec_condition_when_diagonalizable() {
        let (st, g) = two_layer(0.5, 1e-4);
        let a = build_ax(&st, &g).unwrap();
        let dec = eig_dense(&a).unwrap();
        assert!(dec.values.iter().all(|z| z.im.abs() <= 1e-12));
        let cond = cond2_complex(&CMat::from_columns(&dec.right));
        for tau_max in [10.0, 100.0, 1000.0] {
            let norm = growth_probe(&st, &g, 0.0, tau_max, 32).unwrap();
            assert!(
                norm <= cond * (1.0 + 1e-8),
                "norm {norm} above cond {cond} at {tau_max}"
            );
        }
    }

    #[test]
    fn growth_probe_rejects_bad_horizons() {
        let (st, g) = two_layer(0.5, 1e-3);
        assert!(growth_probe(&st, &g, 0.0, 0.0, 8).is_err());
        assert!(growth_probe(&st, &g, 0.0, f64::INFINITY, 8).is_err());
        assert!(growth_probe(&st, &g, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn advective_family_is_exactly_degenerate() {
        let st = State::new(
            vec![1.0, 0.7, 1.3],
            vec![0.01, -0.02, 0.015],
            vec![0.005, 0.0, -0.01],
        )
        .unwrap();
        let g = ratios(&[0.9, 0.99]);
        for i in 0..3 {
            let entry = wave_nature(WaveLabel::Advective(i), &st, &g, None).unwrap();
            assert_eq!(entry.nature, FieldNature::LinearlyDegenerate);
            assert_eq!(entry.derivative.unwrap(), 0.0);
            assert!(entry.scale > 0.5);
        }
    }

    #[test]
    fn single_layer_barotropic_is_genuinely_nonlinear() {
        let st = State::new(vec![1.0], vec![0.3], vec![0.0]).unwrap();
        let g = ratios(&[]);
        let entry = wave_nature(WaveLabel::BarotropicPlus, &st, &g, None).unwrap();
        assert_eq!(entry.nature, FieldNature::GenuinelyNonlinear);
        // Closed form: λ = u + √h, r = (h/√H, 1, 0) → ∇λ·r = 3/2.
        let d = entry.derivative.unwrap();
        assert!((d - 1.5).abs() < 1e-5, "derivative {d}");
        // The minus family mirrors to the same value: ∇λ = (−1/(2√h), 1, 0)
        // against r = (−h/√H, 1, 0).
        let entry = wave_nature(WaveLabel::BarotropicMinus, &st, &g, None).unwrap();
        assert_eq!(entry.nature, FieldNature::GenuinelyNonlinear);
        assert!((entry.derivative.unwrap() - 1.5).abs() < 1e-5);
    }

    #[test]
    fn regime_wave_families_are_genuinely_nonlinear() {
        // Unequal depths: the baroclinic derivative at rest is proportional
        // to h₂² − h₁² and vanishes exactly on the equal-depth line.
        let st = State::rest(vec![1.0, 0.5]).unwrap();
        let g = ratios(&[0.99]);
        let entries = wave_nature_spectrum(&st, &g, None).unwrap();
        assert_eq!(entries.len(), 6);
        for entry in &entries {
            match entry.label {
                WaveLabel::Advective(_) => {
                    assert_eq!(entry.nature, FieldNature::LinearlyDegenerate)
                }
                _ => {
                    assert_eq!(
                        entry.nature,
                        FieldNature::GenuinelyNonlinear,
                        "{:?} gave {:?} (derivative {:?}, scale {:e})",
                        entry.label,
                        entry.nature,
                        entry.derivative,
                        entry.scale
                    );
                    let d = entry.derivative.unwrap().abs();
                    assert!(d >= 1e-4 * entry.scale);
                }
            }
        }
    }

    #[test]
    fn wave_nature_rejects_complex_pairs_and_stray_labels() {
        let (st, g) = two_layer(2.0, 1e-3);
        assert!(wave_nature(WaveLabel::BaroclinicPlus(0), &st, &g, None).is_err());
        let rest = State::rest(vec![1.0, 1.0]).unwrap();
        let g2 = ratios(&[0.99]);
        assert!(wave_nature(WaveLabel::Zero(0), &rest, &g2, None).is_err());
        assert!(wave_nature(WaveLabel::Vortical(0), &rest, &g2, None).is_err());
        assert!(wave_nature(WaveLabel::Advective(5), &rest, &g2, None).is_err());
    }

    #[test]
    fn two_layer_sweep_locates_the_transition() {
        let eps = 1e-3;
        let phi: f64 = 2.0 * eps;
        let base = State::rest(vec![1.0, 1.0]).unwrap();
        let g = ratios(&[1.0 - eps]);
        let axis = AxisSpec {
            coord: StateCoord::U(1),
            min: 0.0,
            max: 3.0 * phi.sqrt(),
            steps: 121,
        };
        let rows = sweep(&base, &g, &[axis], &quick()).unwrap();
        assert_eq!(rows.len(), 121);
        assert!(rows.iter().all(|r| r.axis2.is_none()));
        let flip = rows
            .iter()
            .position(|r| r.numeric == NumericVerdict::NonHyperbolic)
            .expect("the sweep must cross the transition");
        let shear = rows[flip].axis1;
        assert!(
            (shear - phi.sqrt()).abs() <= 0.1 * phi.sqrt(),
            "transition at {shear}, predicted {}",
            phi.sqrt()
        );
        // Rows after the flip stay complex along this ray; rows before are
        // real and ordered exactly row-major.
        assert!(rows[flip..].iter().all(|r| r.numeric == NumericVerdict::NonHyperbolic
            || r.numeric == NumericVerdict::HyperbolicNondiagonalizableSuspect));
        for w in rows.windows(2) {
            assert!(w[0].axis1 < w[1].axis1);
        }
    }

    #[test]
    fn sweep_single_point_and_two_axis_shapes() {
        let base = State::rest(vec![1.0, 1.0]).unwrap();
        let g = ratios(&[0.95]);
        let point = AxisSpec { coord: StateCoord::U(0), min: 0.0, max: 0.0, steps: 1 };
        let rows = sweep(&base, &g, &[point], &quick()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].symmetrizable);
        assert_eq!(rows[0].asymptotic, Some(true));
        assert!(rows[0].margin_min.unwrap() > 0.0);

        let ax1 = AxisSpec { coord: StateCoord::U(1), min: -0.01, max: 0.01, steps: 3 };
        let ax2 = AxisSpec { coord: StateCoord::V(1), min: 0.0, max: 0.01, steps: 2 };
        let rows = sweep(&base, &g, &[ax1, ax2], &quick()).unwrap();
        assert_eq!(rows.len(), 6);
        // Row-major: axis1 varies slowest.
        assert_eq!(rows[0].axis1, rows[1].axis1);
        assert!(rows[0].axis1 < rows[2].axis1);
        assert_eq!(rows[0].axis2, Some(0.0));
        assert_eq!(rows[1].axis2, Some(0.01));
        assert!(rows.iter().all(|r| r.numeric == NumericVerdict::HyperbolicDiagonalizable));
    }

    #[test]
    fn sweep_rejects_bad_axes() {
        let base = State::rest(vec![1.0, 1.0]).unwrap();
        let g = ratios(&[0.95]);
        let ok = AxisSpec { coord: StateCoord::U(0), min: 0.0, max: 1.0, steps: 2 };
        assert!(sweep(&base, &g, &[], &quick()).is_err());
        assert!(sweep(&base, &g, &[ok, ok, ok], &quick()).is_err());
        let bad_idx = AxisSpec { coord: StateCoord::H(7), ..ok };
        assert!(sweep(&base, &g, &[bad_idx], &quick()).is_err());
        let bad_range = AxisSpec { min: 1.0, max: 0.0, ..ok };
        assert!(sweep(&base, &g, &[bad_range], &quick()).is_err());
        let neg_h = AxisSpec { coord: StateCoord::H(0), min: -1.0, max: 1.0, steps: 2 };
        assert!(sweep(&base, &g, &[neg_h], &quick()).is_err());
        let zero = AxisSpec { steps: 0, ..ok };
        assert!(sweep(&base, &g, &[zero], &quick()).is_err());
        let huge = AxisSpec { steps: 1001, ..ok };
        assert!(sweep(&base, &g, &[huge, huge], &quick()).is_err());
    }

    #[test]
    fn sweep_is_deterministic_across_runs() {
        let base = State::rest(vec![1.0, 0.8]).unwrap();
        let g = ratios(&[0.98]);
        let ax1 = AxisSpec { coord: StateCoord::U(1), min: 0.0, max: 0.08, steps: 9 };
        let ax2 = AxisSpec { coord: StateCoord::H(0), min: 0.5, max: 1.5, steps: 4 };
        let a = sweep(&base, &g, &[ax1, ax2], &quick()).unwrap();
        let b = sweep(&base, &g, &[ax1, ax2], &quick()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.axis1, y.axis1);
            assert_eq!(x.axis2, y.axis2);
            assert_eq!(x.numeric, y.numeric);
            assert_eq!(x.max_imag, y.max_imag);
            assert_eq!(x.margin_min, y.margin_min);
        }
    }

    /// Random in-regime state: distinct exponents with 1 among them so the
    /// fit recovers the same ε, heights order one. Half the samples draw
    /// shears at the symmetrizer budget scale (so the symmetrizable set is
    /// actually populated), the rest at the regime scale ε^{σ/2}.
    fn random_regime_state(rng: &mut ChaCha8Rng, n: usize) -> (State, DensityRatios) {
        let eps = 10f64.powf(rng.random_range(-4.0..-2.0));
        let mut sigma: Vec<f64> = vec![1.0];
        while sigma.len() < n - 1 {
            let s: f64 = rng.random_range(1.0..2.5);
            if sigma.iter().all(|t| (t - s).abs() > 0.05) {
                sigma.push(s);
            }
        }
        let j = rng.random_range(0..n - 1);
        sigma.swap(0, j);
        let gamma: Vec<f64> = sigma.iter().map(|s| 1.0 - eps.powf(*s)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..2.0)).collect();
        let g = ratios(&gamma);
        let cap = delta_bounds(&h, &g)
            .unwrap()
            .refined
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let tiny: bool = rng.random();
        let draw = |i: usize, rng: &mut ChaCha8Rng| -> f64 {
            if tiny {
                cap * rng.random_range(-1.0..1.0)
            } else {
                eps.powf(sigma[i] / 2.0) * rng.random_range(-1.5..1.5)
            }
        };
        let mut u = vec![rng.random_range(-0.5..0.5)];
        let mut v = vec![rng.random_range(-0.5..0.5)];
        for i in 0..n - 1 {
            let du = draw(i, rng);
            u.push(u[i] + du);
            let dv = draw(i, rng);
            v.push(v[i] + dv);
        }
        (State::new(h, u, v).unwrap(), g)
    }

    #[test]
    fn symmetrizable_states_are_numerically_hyperbolic() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut symmetrizable_seen = 0;
        for _ in 0..100 {
            let n = rng.random_range(2..=4);
            let (st, g) = random_regime_state(&mut rng, n);
            let verdict = classify(&st, &g, &quick()).unwrap();
            if verdict.symmetrizable {
                symmetrizable_seen += 1;
                assert_ne!(
                    verdict.numeric,
                    NumericVerdict::NonHyperbolic,
                    "chain violated at h={:?} u={:?} v={:?} gamma={:?}",
                    st.h(),
                    st.u(),
                    st.v(),
                    g.gamma()
                );
            }
        }
        assert!(symmetrizable_seen > 0, "sample never hit the symmetrizable set");
    }

    #[test]
    fn explicit_budget_sits_inside_the_regime_criterion() {
        // Shears drawn around the explicit budget: the passing half must
        // satisfy every per-interface margin whenever the height floor holds.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut passes = 0;
        for _ in 0..200 {
            let n = rng.random_range(2..=4usize);
            let eps = 10f64.powf(rng.random_range(-4.0..-3.0));
            let mut sigma: Vec<f64> = Vec::new();
            while sigma.len() < n - 1 {
                let s: f64 = rng.random_range(1.0..2.0);
                if sigma.iter().all(|t| (t - s).abs() > 0.05) {
                    sigma.push(s);
                }
            }
            sigma[0] = 1.0;
            let gamma: Vec<f64> = sigma.iter().map(|s| 1.0 - eps.powf(*s)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
            let g = ratios(&gamma);
            let budget = delta_bounds(&h, &g).unwrap().explicit;
            let cap = budget.iter().cloned().fold(f64::INFINITY, f64::min).sqrt();
            let mut u = vec![0.0; 1];
            for i in 0..n - 1 {
                u.push(u[i] + rng.random_range(-2.0..2.0) * cap);
            }
            let st = State::new(h, u, vec![0.0; n]).unwrap();
            let Ok(scheme) = fit_regime(&st, &g) else { continue };
            if !regime_height_floor_ok(&st, &g, &scheme).unwrap() {
                continue;
            }
            let margins = explicit_bound_margins(&st, &g).unwrap();
            if margins.iter().all(|&m| m > 0.0) {
                passes += 1;
                let criterion = asymptotic_route(&st, &g).unwrap();
                assert!(
                    criterion.holds,
                    "explicit budget passed but regime margins {:?} fail",
                    criterion.margins
                );
            }
        }
        assert!(passes > 20, "only {passes} samples passed the explicit budget");
    }

    #[test]
    fn regime_failure_with_real_spectrum_is_a_warning_not_an_error() {
        // At strong stratification the exact transition sits well past the
        // asymptotic budget (measured near 1.17·φ for γ = 0.5): a shear at
        // 1.1·φ fails the criterion while every sampled direction stays real.
        let (st, g) = two_layer(1.1, 0.5);
        let verdict = classify(&st, &g, &ClassifyOptions::default()).unwrap();
        let criterion = verdict.asymptotic.as_ref().unwrap();
        assert!(!criterion.holds);
        assert_ne!(verdict.numeric, NumericVerdict::NonHyperbolic);
        assert!(!verdict.warnings.is_empty());
    }

    #[test]
    fn classify_attaches_the_growth_probe_when_asked() {
        let (st, g) = two_layer(0.5, 1e-3);
        let options = ClassifyOptions {
            growth: Some(GrowthSpec { theta: 0.0, tau_max: 50.0, samples: 16 }),
            ..quick()
        };
        let verdict = classify(&st, &g, &options).unwrap();
        let norm = verdict.growth_max_norm.unwrap();
        assert!(norm >= 1.0 && norm <= verdict.eigvec_cond * (1.0 + 1e-8));
    }
}
