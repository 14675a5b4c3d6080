//! Weak-stratification regime: density jumps written as powers of one
//! small parameter, per-interface exponents, and the contiguous layer
//! blocks that behave as a single layer at each interface's order.
//!
//! Everything here is bookkeeping for the asymptotic expansions; the
//! numerics stay in the asymptotics and hyperbolicity modules.

use thiserror::Error;

use crate::model::{DensityRatios, ModelError, State};

#[derive(Debug, Error)]
pub enum StratificationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("density jumps must be pairwise distinct; 1-gamma = {value} repeats")]
    DuplicateStratification { value: f64 },
    #[error("interface index {got} out of range; state has {interfaces} interfaces")]
    IndexOutOfRange { got: usize, interfaces: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Stratification written as 1−γ_i = ε^{σ(i)}: one small parameter ε, one
/// exponent per interface, plus the scaled shear and height-ratio
/// coefficients the expansions assume bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct StratScheme {
    epsilon: f64,
    sigma: Vec<f64>,
    pi: Vec<f64>,
    varpi: Vec<f64>,
}

impl StratScheme {
    /// Direct construction; `fit_regime` is the usual entry point.
    pub fn new(
        epsilon: f64,
        sigma: Vec<f64>,
        pi: Vec<f64>,
        varpi: Vec<f64>,
    ) -> Result<Self, StratificationError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(StratificationError::InvalidInput(
                "stratification parameter must lie in (0, 1)".into(),
            ));
        }
        if sigma.is_empty() || sigma.len() != pi.len() || sigma.len() != varpi.len() {
            return Err(StratificationError::InvalidInput(
                "scheme needs one exponent, shear, and height ratio per interface".into(),
            ));
        }
        if sigma
            .iter()
            .chain(&pi)
            .chain(&varpi)
            .any(|x| !x.is_finite())
        {
            return Err(StratificationError::InvalidInput(
                "scheme entries must be finite".into(),
            ));
        }
        let min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
        if (min - 1.0).abs() > 1e-12 || sigma.iter().any(|&s| s <= 0.0) {
            return Err(StratificationError::InvalidInput(
                "exponents must be positive with minimum 1".into(),
            ));
        }
        let mut sorted = sigma.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(StratificationError::InvalidInput(
                    "exponents must be pairwise distinct".into(),
                ));
            }
        }
        Ok(Self { epsilon, sigma, pi, varpi })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Interface exponents, zero-based interface i between layers i, i+1.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Scaled shears π_i = (u_{i+1}−u_i)·(1−γ_i)^{−1/2}.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Height ratios ϖ_i = h_i/h_{i+1}.
    pub fn varpi(&self) -> &[f64] {
        &self.varpi
    }

    pub fn interfaces(&self) -> usize {
        self.sigma.len()
    }

    /// Interface with the strongest density jump (exponent 1).
    pub fn argmin_sigma(&self) -> usize {
        let mut best = 0;
        for i in 1..self.sigma.len() {
            if self.sigma[i] < self.sigma[best] {
                best = i;
            }
        }
        best
    }

    /// Interface with the weakest density jump (largest exponent).
    pub fn argmax_sigma(&self) -> usize {
        let mut best = 0;
        for i in 1..self.sigma.len() {
            if self.sigma[i] > self.sigma[best] {
                best = i;
            }
        }
        best
    }
}

/// Layer block [m_minus, m_plus] that an interface couples at its own
/// order, with the summed heights on each side of the interface.
/// Layer indices are zero-based; m_minus ≤ i < m_plus.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSupport {
    pub m_minus: usize,
    pub m_plus: usize,
    pub h_minus: f64,
    pub h_plus: f64,
}

/// Reads off (ε, σ, π, ϖ) from a state: ε is the largest density jump,
/// exponents are log-ratios (so the strongest interface gets exactly 1),
/// shears are scaled by the local jump's square root.
pub fn fit_regime(state: &State, gamma: &DensityRatios) -> Result<StratScheme, StratificationError> {
    let n = state.n();
    if n != gamma.n() {
        return Err(StratificationError::InvalidInput(format!(
            "state has {} layers but ratios describe {}",
            n,
            gamma.n()
        )));
    }
    if n < 2 {
        return Err(StratificationError::InvalidInput(
            "the regime needs at least one interface".into(),
        ));
    }
    if !gamma.strictly_stable() {
        return Err(StratificationError::InvalidInput(
            "density ratios must lie strictly inside (0, 1)".into(),
        ));
    }
    let jumps: Vec<f64> = gamma.gamma().iter().map(|g| 1.0 - g).collect();
    let mut sorted = jumps.clone();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(StratificationError::DuplicateStratification { value: w[0] });
        }
    }
    let epsilon = sorted[sorted.len() - 1];
    let sigma: Vec<f64> = jumps.iter().map(|j| j.ln() / epsilon.ln()).collect();
    if state.h().iter().any(|&h| h <= 0.0) {
        return Err(StratificationError::InvalidInput(
            "heights must be strictly positive to define the regime ratios".into(),
        ));
    }
    // ε^{σ(i)/2} equals √(1−γ_i) by construction; the square root avoids a
    // detour through powf.
    let pi: Vec<f64> = (0..n - 1)
        .map(|i| (state.u()[i + 1] - state.u()[i]) / jumps[i].sqrt())
        .collect();
    let varpi: Vec<f64> = (0..n - 1).map(|i| state.h()[i] / state.h()[i + 1]).collect();
    StratScheme::new(epsilon, sigma, pi, varpi)
}

/// The contiguous block of layers interacting with interface `i` at its
/// order: extend from the interface while every crossed interface has an
/// exponent at least σ(i).
pub fn interface_support(
    i: usize,
    scheme: &StratScheme,
    h: &[f64],
) -> Result<InterfaceSupport, StratificationError> {
    let interfaces = scheme.interfaces();
    if i >= interfaces {
        return Err(StratificationError::IndexOutOfRange { got: i, interfaces });
    }
    if h.len() != interfaces + 1 {
        return Err(StratificationError::InvalidInput(format!(
            "expected {} heights, got {}",
            interfaces + 1,
            h.len()
        )));
    }
    let sigma = scheme.sigma();
    let cut = sigma[i];
    let mut m_minus = i;
    while m_minus > 0 && sigma[m_minus - 1] >= cut {
        m_minus -= 1;
    }
    let mut m_plus = i + 1;
    while m_plus < interfaces && sigma[m_plus] >= cut {
        m_plus += 1;
    }
    Ok(InterfaceSupport {
        m_minus,
        m_plus,
        h_minus: h[m_minus..=i].iter().sum(),
        h_plus: h[i + 1..=m_plus].iter().sum(),
    })
}

/// Effective squared-speed budget of interface `i`:
/// (h_minus + h_plus)·(1−γ_i). The internal-wave criterion compares the
/// squared shear against it.
pub fn phi_sigma(
    i: usize,
    support: &InterfaceSupport,
    gamma: &DensityRatios,
) -> Result<f64, StratificationError> {
    if i + 1 >= gamma.n() {
        return Err(StratificationError::IndexOutOfRange {
            got: i,
            interfaces: gamma.n().saturating_sub(1),
        });
    }
    Ok((support.h_minus + support.h_plus) * (1.0 - gamma.gamma()[i]))
}

/// Advisory thresholds for the regime's boundedness assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// Cap on π_i²/(h_i + h_{i+1}).
    pub c_pi: f64,
    /// Cap on max(ϖ_i, 1/ϖ_i).
    pub c_varpi: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { c_pi: 4.0, c_varpi: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCheck {
    pub pi_ratio: f64,
    pub varpi_ratio: f64,
    pub pi_ok: bool,
    pub varpi_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub interfaces: Vec<InterfaceCheck>,
    pub all_ok: bool,
}

/// Advisory check that the scheme's coefficients stay within the bounds
/// the expansions assume; never an error, only flags.
pub fn validate_regime(
    state: &State,
    scheme: &StratScheme,
    thresholds: RegimeThresholds,
) -> Result<RegimeReport, StratificationError> {
    let n = state.n();
    if scheme.interfaces() + 1 != n {
        return Err(StratificationError::InvalidInput(format!(
            "scheme describes {} interfaces but the state has {}",
            scheme.interfaces(),
            n - 1
        )));
    }
    let mut interfaces = Vec::with_capacity(n - 1);
    let mut all_ok = true;
    for i in 0..n - 1 {
        let pi = scheme.pi()[i];
        let pi_ratio = pi * pi / (state.h()[i] + state.h()[i + 1]);
        let varpi = scheme.varpi()[i];
        let varpi_ratio = varpi.max(1.0 / varpi);
        let pi_ok = pi_ratio <= thresholds.c_pi;
        let varpi_ok = varpi_ratio <= thresholds.c_varpi;
        all_ok &= pi_ok && varpi_ok;
        interfaces.push(InterfaceCheck { pi_ratio, varpi_ratio, pi_ok, varpi_ok });
    }
    Ok(RegimeReport { interfaces, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ratios(g: &[f64]) -> DensityRatios {
        DensityRatios::new(g.to_vec()).unwrap()
    }

    fn four_layer_scheme() -> (State, DensityRatios, StratScheme) {
        let st = State::rest(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let g = ratios(&[0.9, 0.99, 0.95]);
        let scheme = fit_regime(&st, &g).unwrap();
        (st, g, scheme)
    }

    #[test]
    fn fit_worked_values() {
        let (_, _, scheme) = four_layer_scheme();
        assert_relative_eq!(scheme.epsilon(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(scheme.sigma()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(scheme.sigma()[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(scheme.sigma()[2], 1.30103, max_relative = 1e-5);
        assert_eq!(scheme.argmin_sigma(), 0);
        assert_eq!(scheme.argmax_sigma(), 1);

        let two = State::rest(vec![1.0, 1.0]).unwrap();
        let s2 = fit_regime(&two, &ratios(&[0.99])).unwrap();
        assert_relative_eq!(s2.epsilon(), 0.01, epsilon = 1e-15);
        assert_eq!(s2.sigma(), &[1.0]);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let st = State::rest(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            fit_regime(&st, &ratios(&[0.9, 0.9])),
            Err(StratificationError::DuplicateStratification { .. })
        ));
        assert!(fit_regime(&st, &ratios(&[0.9, 1.1])).is_err());
        let single = State::rest(vec![1.0]).unwrap();
        assert!(fit_regime(&single, &ratios(&[])).is_err());
    }

    #[test]
    fn shear_coefficients_scale_with_the_jump() {
        let st = State::new(
            vec![1.0, 1.0],
            vec![0.0, 0.05],
            vec![0.0, 0.0],
        )
        .unwrap();
        let scheme = fit_regime(&st, &ratios(&[0.99])).unwrap();
        assert_relative_eq!(scheme.pi()[0], 0.05 / 0.1, max_relative = 1e-12);
        assert_eq!(scheme.varpi(), &[1.0]);
    }

    #[test]
    fn support_worked_table() {
        let (st, _, scheme) = four_layer_scheme();
        // Interface exponents (1, 2, 1.301); zero-based indices throughout.
        let s0 = interface_support(0, &scheme, st.h()).unwrap();
        assert_eq!((s0.m_minus, s0.m_plus), (0, 3));
        assert_eq!((s0.h_minus, s0.h_plus), (1.0, 3.0));

        let s1 = interface_support(1, &scheme, st.h()).unwrap();
        assert_eq!((s1.m_minus, s1.m_plus), (1, 2));
        assert_eq!((s1.h_minus, s1.h_plus), (1.0, 1.0));

        let s2 = interface_support(2, &scheme, st.h()).unwrap();
        assert_eq!((s2.m_minus, s2.m_plus), (1, 3));
        assert_eq!((s2.h_minus, s2.h_plus), (2.0, 1.0));

        assert!(matches!(
            interface_support(3, &scheme, st.h()),
            Err(StratificationError::IndexOutOfRange { got: 3, interfaces: 3 })
        ));
    }

    #[test]
    fn phi_worked_values() {
        let (st, g, scheme) = four_layer_scheme();
        let s1 = interface_support(1, &scheme, st.h()).unwrap();
        assert_relative_eq!(phi_sigma(1, &s1, &g).unwrap(), 0.02, max_relative = 1e-12);
        let s0 = interface_support(0, &scheme, st.h()).unwrap();
        assert_relative_eq!(phi_sigma(0, &s0, &g).unwrap(), 0.4, max_relative = 1e-12);

        let two = State::rest(vec![1.0, 1.0]).unwrap();
        let g2 = ratios(&[0.99]);
        let sch2 = fit_regime(&two, &g2).unwrap();
        let sup = interface_support(0, &sch2, two.h()).unwrap();
        assert_relative_eq!(phi_sigma(0, &sup, &g2).unwrap(), 0.02, max_relative = 1e-12);
    }

    #[test]
    fn regime_validation_flags() {
        let (st, _, scheme) = four_layer_scheme();
        let rep = validate_regime(&st, &scheme, RegimeThresholds::default()).unwrap();
        assert!(rep.all_ok);

        let skewed = State::rest(vec![100.0, 0.01, 1.0]).unwrap();
        let g = ratios(&[0.9, 0.99]);
        let scheme = fit_regime(&skewed, &g).unwrap();
        let rep = validate_regime(&skewed, &scheme, RegimeThresholds::default()).unwrap();
        assert!(!rep.all_ok);
        assert!(!rep.interfaces[0].varpi_ok);
        assert_relative_eq!(rep.interfaces[0].varpi_ratio, 1e4, max_relative = 1e-12);
        // 1/ϖ exactly at the cap is not flagged (strict comparison).
        assert!(rep.interfaces[1].varpi_ok);
        assert!(rep.interfaces.iter().all(|c| c.pi_ok));
    }

    #[test]
    fn scheme_constructor_rejects_broken_invariants() {
        assert!(StratScheme::new(0.1, vec![2.0, 3.0], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(StratScheme::new(0.1, vec![1.0, 1.0], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(StratScheme::new(1.5, vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(StratScheme::new(0.1, vec![1.0], vec![0.0; 2], vec![1.0]).is_err());
    }

    prop_compose! {
        fn arb_regime(n: usize)
            (h in prop::collection::vec(0.05f64..4.0, n),
             u in prop::collection::vec(-1.0f64..1.0, n),
             g in prop::collection::vec(0.3f64..0.999, n - 1))
            -> Option<(State, DensityRatios)>
        {
            let mut jumps: Vec<f64> = g.iter().map(|x| 1.0 - x).collect();
            jumps.sort_by(f64::total_cmp);
            if jumps.windows(2).any(|w| w[0] == w[1]) {
                return None;
            }
            let v = vec![0.0; n];
            Some((State::new(h, u, v).unwrap(), DensityRatios::new(g).unwrap()))
        }
    }

    proptest! {
        #[test]
        fn supports_are_contiguous_and_ordered(input in arb_regime(5)) {
            let Some((st, g)) = input else { return Ok(()) };
            let scheme = fit_regime(&st, &g).unwrap();
            for i in 0..scheme.interfaces() {
                let s = interface_support(i, &scheme, st.h()).unwrap();
                prop_assert!(s.m_minus <= i && i < s.m_plus);
                prop_assert!(s.m_plus <= st.n() - 1);
                prop_assert!(s.h_minus > 0.0 && s.h_plus > 0.0);
                // Every interface strictly inside the block carries an
                // exponent at least as large as the anchor's.
                for k in s.m_minus..s.m_plus {
                    prop_assert!(scheme.sigma()[k] >= scheme.sigma()[i]);
                }
            }
        }

        #[test]
        fn strongest_interface_spans_everything(input in arb_regime(4)) {
            let Some((st, g)) = input else { return Ok(()) };
            let scheme = fit_regime(&st, &g).unwrap();
            let m = scheme.argmin_sigma();
            let s = interface_support(m, &scheme, st.h()).unwrap();
            prop_assert_eq!(s.m_minus, 0);
            prop_assert_eq!(s.m_plus, st.n() - 1);
        }

        #[test]
        fn phi_dominates_the_local_two_layer_budget(input in arb_regime(4)) {
            let Some((st, g)) = input else { return Ok(()) };
            let scheme = fit_regime(&st, &g).unwrap();
            for i in 0..scheme.interfaces() {
                let s = interface_support(i, &scheme, st.h()).unwrap();
                let phi = phi_sigma(i, &s, &g).unwrap();
                let local = (st.h()[i] + st.h()[i + 1]) * (1.0 - g.gamma()[i]);
                prop_assert!(phi >= local - 1e-15);
            }
        }

        #[test]
        fn jumps_reconstruct_from_the_scheme(input in arb_regime(4)) {
            let Some((st, g)) = input else { return Ok(()) };
            let scheme = fit_regime(&st, &g).unwrap();
            for (i, gi) in g.gamma().iter().enumerate() {
                let rebuilt = 1.0 - scheme.epsilon().powf(scheme.sigma()[i]);
                prop_assert!((rebuilt - gi).abs() <= 1e-14 * gi.abs());
            }
        }
    }
}
