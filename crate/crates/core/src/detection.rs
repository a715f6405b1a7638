//! Photon-number noise budgets for absorptive measurements read out by
//! differential detection.
//!
//! A probe of amplitude `alpha` is split by a variable beam splitter into a
//! sensing arm (transmissivity `T`) that crosses the medium and a reference
//! arm (reflectivity `R`). The medium attenuates the sensing amplitude by
//! `exp(-epsilon)` and couples in vacuum. The observable is the difference of
//! the two detected photon numbers. With squeezed vacuum injected at the
//! unused splitter port the amplitude-quadrature noise of that port drops by
//! `exp(-2r)`.
//!
//! All intensities are photon numbers, so `alpha^2` is dimensionless.

use crate::error::{domain, Error, Result};

/// Squeezer phase that aligns the squeezed quadrature with the measured
/// amplitude quadrature: `b_q = cosh(r) b - sinh(r) b^dagger`.
pub const AMPLITUDE_SQUEEZING_PHASE: f64 = std::f64::consts::PI;

/// Absolute tolerance used when checking `exp(-2 eps) T = R`.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// Coherent-state readout through a variable beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentScheme {
    alpha: f64,
    transmissivity: f64,
    reflectivity: f64,
}

impl CoherentScheme {
    /// Builds a scheme from the amplitude and the splitter transmissivity;
    /// the reflectivity is `1 - T`.
    pub fn new(alpha: f64, transmissivity: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_transmissivity(transmissivity)?;
        Ok(Self {
            alpha,
            transmissivity,
            reflectivity: 1.0 - transmissivity,
        })
    }

    /// Direct detection: every photon crosses the medium.
    pub fn direct(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    /// Differential detection with the splitter set by [`balanced_splitter`].
    pub fn balanced(alpha: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_alpha(alpha)?;
        let (t, r) = balanced_splitter(epsilon);
        Ok(Self {
            alpha,
            transmissivity: t,
            reflectivity: r,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }
}

/// Squeezed vacuum at the unused splitter port, combined with a strong
/// classical local oscillator of amplitude `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedScheme {
    alpha: f64,
    transmissivity: f64,
    reflectivity: f64,
    squeeze_factor: f64,
    squeeze_phase: f64,
}

impl SqueezedScheme {
    /// The phase is stored for bookkeeping only; the noise budget assumes
    /// amplitude squeezing.
    pub fn new(
        alpha: f64,
        transmissivity: f64,
        squeeze_factor: f64,
        squeeze_phase: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        check_transmissivity(transmissivity)?;
        check_squeeze(squeeze_factor)?;
        if !squeeze_phase.is_finite() {
            return Err(domain("squeeze_phase", "must be finite"));
        }
        Ok(Self {
            alpha,
            transmissivity,
            reflectivity: 1.0 - transmissivity,
            squeeze_factor,
            squeeze_phase,
        })
    }

    /// Amplitude squeezing with the splitter balanced for `epsilon`.
    pub fn balanced(alpha: f64, squeeze_factor: f64, epsilon: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_squeeze(squeeze_factor)?;
        check_epsilon(epsilon)?;
        let (t, r) = balanced_splitter(epsilon);
        Ok(Self {
            alpha,
            transmissivity: t,
            reflectivity: r,
            squeeze_factor,
            squeeze_phase: AMPLITUDE_SQUEEZING_PHASE,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn squeeze_factor(&self) -> f64 {
        self.squeeze_factor
    }

    pub fn squeeze_phase(&self) -> f64 {
        self.squeeze_phase
    }

    /// Single-quadrature noise improvement `G_s = e^r`.
    pub fn squeezing_gain(&self) -> f64 {
        self.squeeze_factor.exp()
    }
}

/// Slope, variance and resulting absorption-index sensitivity of the
/// differential observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// d<I>/d(epsilon) in photon numbers.
    pub slope_wrt_epsilon: f64,
    /// <delta^2 I> in photon numbers squared.
    pub variance: f64,
    /// `T alpha^2`.
    pub sensing_intensity: f64,
    /// Smallest resolvable change of epsilon, `sqrt(variance) / |slope|`.
    pub sensitivity_epsilon: f64,
    /// Natural log of `sensitivity_epsilon`, evaluated with the common
    /// `exp(-2 eps)` factor cancelled; finite after the slope and variance
    /// underflow and after the resolution itself overflows.
    pub ln_sensitivity_epsilon: f64,
}

impl NoiseBudget {
    fn from_log(
        slope: f64,
        variance: f64,
        sensing_intensity: f64,
        ln_sensitivity_epsilon: f64,
    ) -> Self {
        Self {
            slope_wrt_epsilon: slope,
            variance,
            sensing_intensity,
            sensitivity_epsilon: ln_sensitivity_epsilon.exp(),
            ln_sensitivity_epsilon,
        }
    }
}

/// `ln(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Noise budget of the coherent-state scheme for an arbitrary splitter.
///
/// Fails with [`Error::ZeroTransmissivity`] when `T = 0`.
pub fn classical_budget(scheme: &CoherentScheme, epsilon: f64) -> Result<NoiseBudget> {
    check_epsilon(epsilon)?;
    let t = scheme.transmissivity;
    if t == 0.0 {
        return Err(Error::ZeroTransmissivity);
    }
    let loss = (-2.0 * epsilon).exp();
    let sensing = t * scheme.alpha * scheme.alpha;
    let ratio = scheme.reflectivity / t;
    // sqrt(loss + R/T) / (2 loss sqrt(s)) with loss = exp(-2 eps).
    let ln_excess = if ratio > 0.0 {
        softplus(ratio.ln() + 2.0 * epsilon)
    } else {
        0.0
    };
    let ln_res = epsilon + 0.5 * ln_excess - (2.0 * sensing.sqrt()).ln();
    Ok(NoiseBudget::from_log(
        -2.0 * loss * sensing,
        (loss + ratio) * sensing,
        sensing,
        ln_res,
    ))
}

/// [`classical_budget`] for the splitter balanced at `epsilon`. The resolution
/// uses `R / T = exp(-2 eps)` exactly, which survives the underflow of `R`.
pub fn balanced_classical_budget(alpha: f64, epsilon: f64) -> Result<NoiseBudget> {
    let scheme = CoherentScheme::balanced(alpha, epsilon)?;
    let budget = classical_budget(&scheme, epsilon)?;
    let ln_res = epsilon - 0.5 * (2.0 * budget.sensing_intensity).ln();
    Ok(NoiseBudget::from_log(
        budget.slope_wrt_epsilon,
        budget.variance,
        budget.sensing_intensity,
        ln_res,
    ))
}

/// Splitter `(T, R)` satisfying `exp(-2 eps) T = R` and `T + R = 1`, which
/// cancels the common-mode (laser excess noise) term of the difference signal.
pub fn balanced_splitter(epsilon: f64) -> (f64, f64) {
    let loss = (-2.0 * epsilon).exp();
    let t = 1.0 / (1.0 + loss);
    (t, loss * t)
}

/// Noise budget of the squeezed-vacuum scheme. The splitter must already be
/// balanced for `epsilon`; the squeezer is assumed amplitude-aligned.
pub fn squeezed_budget(scheme: &SqueezedScheme, epsilon: f64) -> Result<NoiseBudget> {
    check_epsilon(epsilon)?;
    check_squeeze(scheme.squeeze_factor)?;
    let loss = (-2.0 * epsilon).exp();
    let imbalance = loss * scheme.transmissivity - scheme.reflectivity;
    if imbalance.abs() > BALANCE_TOLERANCE {
        return Err(Error::Contract(format!(
            "splitter is not balanced for epsilon = {epsilon}: exp(-2 eps) T - R = {imbalance:e}"
        )));
    }
    if scheme.transmissivity == 0.0 {
        return Err(Error::ZeroTransmissivity);
    }
    let sensing = scheme.transmissivity * scheme.alpha * scheme.alpha;
    let bracket = squeezed_bracket(scheme.squeeze_factor, epsilon);
    let ln_res = epsilon + 0.5 * (bracket / sensing).ln() - std::f64::consts::LN_2;
    Ok(NoiseBudget::from_log(
        -2.0 * loss * sensing,
        bracket * loss * sensing,
        sensing,
        ln_res,
    ))
}

/// Sensitivity improvement of the squeezed scheme over balanced coherent
/// readout, `G_q = sqrt(2) / sqrt((1 + e^{-2eps}) e^{-2r} + 1 - e^{-2eps})`.
pub fn quantum_enhancement(squeeze_factor: f64, epsilon: f64) -> f64 {
    (2.0 / squeezed_bracket(squeeze_factor, epsilon)).sqrt()
}

/// Upper bound of [`quantum_enhancement`] as `r -> infinity`, or `None`
/// without absorption where the enhancement is unbounded.
pub fn enhancement_limit(epsilon: f64) -> Option<f64> {
    let absorbed = -(-2.0 * epsilon).exp_m1();
    (absorbed > 0.0).then(|| (2.0 / absorbed).sqrt())
}

/// Tabulates `(G_s, G_q)` over squeezing gains `G_s = e^r >= 1`.
pub fn enhancement_curve(epsilon: f64, gains: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_epsilon(epsilon)?;
    gains
        .iter()
        .map(|&gs| {
            if !(gs >= 1.0) || !gs.is_finite() {
                return Err(domain(
                    "gs",
                    format!("squeezing gain must be finite and >= 1, got {gs}"),
                ));
            }
            Ok((gs, quantum_enhancement(gs.ln(), epsilon)))
        })
        .collect()
}

// (1 + l) e^{-2r} + 1 - l with l = e^{-2 eps}; expm1 keeps 1 - l accurate for small eps.
fn squeezed_bracket(squeeze_factor: f64, epsilon: f64) -> f64 {
    let absorbed = -(-2.0 * epsilon).exp_m1();
    (2.0 - absorbed) * (-2.0 * squeeze_factor).exp() + absorbed
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(domain(
            "alpha",
            format!("must be finite and >= 0, got {alpha}"),
        ))
    }
}

fn check_transmissivity(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(domain(
            "transmissivity",
            format!("must lie in [0, 1], got {t}"),
        ))
    }
}

fn check_squeeze(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain(
            "squeeze_factor",
            format!("must be finite and >= 0, got {r}"),
        ))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 {
        Ok(())
    } else {
        Err(domain(
            "epsilon",
            format!("absorption index must be >= 0, got {epsilon}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn resolution_survives_transmission_underflow() {
        let b = balanced_classical_budget(1e7, 0.7).unwrap();
        let c = classical_budget(&CoherentScheme::balanced(1e7, 0.7).unwrap(), 0.7).unwrap();
        assert_relative_eq!(
            b.sensitivity_epsilon,
            c.sensitivity_epsilon,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            c.sensitivity_epsilon,
            c.variance.sqrt() / c.slope_wrt_epsilon.abs(),
            max_relative = 1e-14
        );
        let deep = balanced_classical_budget(1e7, 400.0).unwrap();
        assert_eq!(deep.slope_wrt_epsilon, 0.0);
        let q =
            squeezed_budget(&SqueezedScheme::balanced(1e7, 2.5, 400.0).unwrap(), 400.0).unwrap();
        assert!(q.sensitivity_epsilon.is_finite());
        let far =
            squeezed_budget(&SqueezedScheme::balanced(1e7, 2.5, 900.0).unwrap(), 900.0).unwrap();
        let far_c = balanced_classical_budget(1e7, 900.0).unwrap();
        assert_eq!(far.sensitivity_epsilon, f64::INFINITY);
        assert_relative_eq!(
            far_c.ln_sensitivity_epsilon - far.ln_sensitivity_epsilon,
            quantum_enhancement(2.5, 900.0).ln(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            deep.sensitivity_epsilon / q.sensitivity_epsilon,
            quantum_enhancement(2.5, 400.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn direct_detection_without_absorption() {
        let scheme = CoherentScheme::direct(1e7).unwrap();
        let b = classical_budget(&scheme, 0.0).unwrap();
        // sqrt(I) / (2 I) with I = 1e14.
        assert_relative_eq!(b.sensitivity_epsilon, 5e-8, max_relative = 1e-14);
        assert_eq!(b.variance, b.sensing_intensity);
        assert_eq!(b.slope_wrt_epsilon, -2.0 * b.sensing_intensity);
    }

    #[test]
    fn balanced_classical_variance() {
        // exp(-2 eps) = 0.5 gives T = 2/3, R = 1/3 and variance 2 * 0.5 * I_si.
        let eps = 0.5 * 2f64.ln();
        let scheme = CoherentScheme::balanced(1e7, eps).unwrap();
        assert_relative_eq!(scheme.transmissivity(), 2.0 / 3.0, max_relative = 1e-15);
        let b = classical_budget(&scheme, eps).unwrap();
        assert_relative_eq!(
            b.variance,
            2.0 * 0.5 * b.sensing_intensity,
            max_relative = 1e-14
        );
        assert_relative_eq!(b.variance, 0.666_666_666_666_7e14, max_relative = 1e-12);
    }

    #[test]
    fn zero_transmissivity_is_rejected() {
        let scheme = CoherentScheme::new(1e7, 0.0).unwrap();
        assert_eq!(
            classical_budget(&scheme, 0.1),
            Err(Error::ZeroTransmissivity)
        );
    }

    #[test]
    fn constructors_validate() {
        assert!(CoherentScheme::new(-1.0, 0.5).is_err());
        assert!(CoherentScheme::new(1.0, 1.5).is_err());
        assert!(SqueezedScheme::new(1.0, 0.5, -0.1, 0.0).is_err());
        assert!(classical_budget(&CoherentScheme::direct(1.0).unwrap(), -0.1).is_err());
    }

    #[test]
    fn splitter_limits() {
        assert_eq!(balanced_splitter(0.0), (0.5, 0.5));
        let (t, r) = balanced_splitter(0.5 * 2f64.ln());
        assert_relative_eq!(t, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(r, 1.0 / 3.0, max_relative = 1e-15);
        let (t, r) = balanced_splitter(f64::INFINITY);
        assert_eq!((t, r), (1.0, 0.0));
        let (t, r) = balanced_splitter(40.0);
        assert!((1.0 - t) < 1e-30 && r < 1e-30);
    }

    #[test]
    fn unbalanced_squeezed_scheme_is_a_contract_error() {
        let scheme = SqueezedScheme::new(1e7, 0.5, 1.0, AMPLITUDE_SQUEEZING_PHASE).unwrap();
        assert!(matches!(
            squeezed_budget(&scheme, 0.3),
            Err(Error::Contract(_))
        ));
        assert!(squeezed_budget(&scheme, 0.0).is_ok());
    }

    #[test]
    fn squeezed_bracket_value() {
        // exp(-2 eps) = 0.5, r = 2.5: 1.5 e^-5 + 0.5.
        let eps = 0.5 * 2f64.ln();
        let scheme = SqueezedScheme::balanced(1e7, 2.5, eps).unwrap();
        let b = squeezed_budget(&scheme, eps).unwrap();
        let bracket = b.variance / (0.5 * b.sensing_intensity);
        assert_relative_eq!(bracket, 1.5 * (-5f64).exp() + 0.5, max_relative = 1e-13);
        assert!((bracket - 0.51011).abs() < 1e-5);
    }

    #[test]
    fn squeezing_gain_without_absorption() {
        let squeezed = SqueezedScheme::balanced(1e7, 2.5, 0.0).unwrap();
        let q = squeezed_budget(&squeezed, 0.0).unwrap();
        let balanced = classical_budget(&CoherentScheme::balanced(1e7, 0.0).unwrap(), 0.0).unwrap();
        let ratio = balanced.sensitivity_epsilon / q.sensitivity_epsilon;
        assert_relative_eq!(ratio, 2.5f64.exp(), max_relative = 1e-12);
        assert!((ratio - 12.182).abs() < 1e-3);
        // Direct detection puts all of alpha^2 on the medium and halves the
        // balanced-scheme error, so it gives up a factor of two.
        let direct = classical_budget(&CoherentScheme::direct(1e7).unwrap(), 0.0).unwrap();
        let ratio = direct.sensitivity_epsilon / q.sensitivity_epsilon;
        assert_relative_eq!(ratio, 2.5f64.exp() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn enhancement_reference_values() {
        assert_relative_eq!(
            quantum_enhancement(2.5, 0.0),
            2.5f64.exp(),
            max_relative = 1e-12
        );
        assert_eq!(quantum_enhancement(0.0, 0.7), 1.0);
        let half = -0.5 * 0.5f64.ln();
        let tenth = -0.5 * 0.9f64.ln();
        assert!((quantum_enhancement(2.5, half) - 1.9801).abs() < 1e-4);
        assert!((quantum_enhancement(2.5, tenth) - 4.2107).abs() < 1e-4);
        assert_relative_eq!(enhancement_limit(half).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            enhancement_limit(tenth).unwrap(),
            20f64.sqrt(),
            max_relative = 1e-12
        );
        assert_eq!(enhancement_limit(0.0), None);
    }

    #[test]
    fn enhancement_curve_domain() {
        assert!(enhancement_curve(0.1, &[1.0, 0.5]).is_err());
        let curve = enhancement_curve(0.0, &[1.0, 2.0, 10.0]).unwrap();
        for (gs, gq) in curve {
            assert_relative_eq!(gq, gs, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn no_squeezing_no_gain(eps in 0.0f64..20.0) {
            prop_assert!((quantum_enhancement(0.0, eps) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn lossless_gain_is_e_to_the_r(r in 0.0f64..8.0) {
            let g = quantum_enhancement(r, 0.0);
            prop_assert!((g / r.exp() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn gain_monotone_and_bounded(r in 0.01f64..6.0, dr in 0.001f64..1.0, eps in 0.001f64..3.0, de in 0.001f64..1.0) {
            let g = quantum_enhancement(r, eps);
            prop_assert!(quantum_enhancement(r + dr, eps) > g);
            prop_assert!(quantum_enhancement(r, eps + de) < g);
            prop_assert!(g < enhancement_limit(eps).unwrap());
        }

        #[test]
        fn unsqueezed_reduces_to_balanced_classical(log_alpha in 0.0f64..8.0, eps in 0.0f64..5.0) {
            let alpha = 10f64.powf(log_alpha);
            let c = classical_budget(&CoherentScheme::balanced(alpha, eps).unwrap(), eps).unwrap();
            let q = squeezed_budget(&SqueezedScheme::balanced(alpha, 0.0, eps).unwrap(), eps).unwrap();
            prop_assert!((q.slope_wrt_epsilon / c.slope_wrt_epsilon - 1.0).abs() <= 1e-12);
            prop_assert!((q.variance / c.variance - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn enhancement_is_budget_ratio(log_alpha in 0.0f64..8.0, r in 0.0f64..4.0, eps in 0.0f64..5.0) {
            let alpha = 10f64.powf(log_alpha);
            let c = classical_budget(&CoherentScheme::balanced(alpha, eps).unwrap(), eps).unwrap();
            let q = squeezed_budget(&SqueezedScheme::balanced(alpha, r, eps).unwrap(), eps).unwrap();
            let ratio = c.sensitivity_epsilon / q.sensitivity_epsilon;
            prop_assert!((ratio / quantum_enhancement(r, eps) - 1.0).abs() <= 1e-12);
        }
    }
}
