use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;

use super::steady_state::{condition_number, SteadyState};
use super::{Drive, LadderAtom, CONDITION_WARNING};
use crate::error::{domain, Error, Result};
use crate::numeric::{eigenvalues, QuadratureRule, Resonance};

/// First-order probe coherences `sigma_12, sigma_13, sigma_14`, reported per
/// unit `xi <a>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSolution {
    pub sigma12: Complex64,
    pub sigma13: Complex64,
    pub sigma14: Complex64,
    /// `-(M1 + i omega I)^-1`.
    pub response_matrix: Matrix3<Complex64>,
    pub omega: f64,
    /// `|(M1 + i omega) Sigma1 + S1| / |S1|`.
    pub residual: f64,
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrices {
    pub d1: Matrix3<f64>,
    pub d2: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumCorrelatorReport {
    /// `|1 - C|` where `C` is the added-noise commutator carried by the
    /// probe-transition Langevin force alone.
    pub deviation: f64,
    /// `|1 - C_full|` with every diagonal channel of `D1` included; zero up to
    /// quadrature error when the diffusion matrix is consistent.
    pub full_model_residual: f64,
    /// Normally ordered contribution built from `D2`.
    pub normally_ordered: f64,
    pub warnings: Vec<String>,
}

/// The 3x3 generator of `[sigma12, sigma13, sigma14]`.
pub fn first_order_matrix(atom: &LadderAtom, drive: &Drive) -> Matrix3<Complex64> {
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    let lw = super::complex_linewidths(atom, drive);
    let wc = drive.omega_c;
    let wm = drive.omega_mw;
    let z = re(0.0);
    Matrix3::new(
        -lw.gamma12,
        -i * wc.conj() * 0.5,
        z,
        -i * wc * 0.5,
        -lw.gamma13,
        -i * wm.conj() * 0.5,
        z,
        -i * wm * 0.5,
        -lw.gamma14,
    )
}

fn first_order_source(ss: &SteadyState) -> Vector3<Complex64> {
    let i = Complex64::i();
    Vector3::new(
        i * (ss.sigma22 - ss.sigma11),
        i * ss.sigma23,
        i * ss.sigma24,
    )
}

fn response_at(m1: &Matrix3<Complex64>, omega: f64) -> Option<Matrix3<Complex64>> {
    let shifted = m1 + Matrix3::identity() * Complex64::new(0.0, omega);
    shifted
        .try_inverse()
        .map(|inv| -inv)
        .filter(|r| r.iter().all(|x| x.is_finite()))
}

/// Solves the first-order system at analysis frequency `omega`:
/// `Sigma1 = -(M1 + i omega)^-1 S1`.
pub fn first_order_coherences(
    atom: &LadderAtom,
    drive: &Drive,
    ss: &SteadyState,
    omega: f64,
) -> Result<CoherenceSolution> {
    atom.validate()?;
    drive.validate()?;
    if !omega.is_finite() {
        return Err(domain("omega", "must be finite"));
    }
    let m1 = first_order_matrix(atom, drive);
    let shifted = m1 + Matrix3::identity() * Complex64::new(0.0, omega);
    let condition = condition_number(&shifted);
    let Some(response) = response_at(&m1, omega) else {
        return Err(Error::Solver {
            system: "first-order coherences",
            condition,
        });
    };
    let s1 = first_order_source(ss);
    let sigma = response * s1;
    let scale = s1.norm();
    let residual = if scale > 0.0 {
        (shifted * sigma + s1).norm() / scale
    } else {
        sigma.norm()
    };
    let mut warnings = Vec::new();
    if condition > CONDITION_WARNING {
        warnings.push(format!(
            "ill-conditioned first-order system (condition {condition:e})"
        ));
    }
    Ok(CoherenceSolution {
        sigma12: sigma[0],
        sigma13: sigma[1],
        sigma14: sigma[2],
        response_matrix: response,
        omega,
        residual,
        condition_number: condition,
        warnings,
    })
}

pub fn diffusion_matrices(atom: &LadderAtom) -> DiffusionMatrices {
    DiffusionMatrices {
        d1: Matrix3::from_diagonal(&Vector3::new(atom.gamma2, atom.gamma3, atom.gamma4)),
        d2: Matrix3::zeros(),
    }
}

/// Integrates the Langevin-force spectrum of the probe coherence over all
/// analysis frequencies and compares the resulting commutator with 1.
///
/// `gamma3` and `gamma4` may be zero here; the weak-decay condition is only
/// reported through the warnings.
pub fn vacuum_correlator_check(atom: &LadderAtom, drive: &Drive) -> Result<VacuumCorrelatorReport> {
    if !(atom.gamma2 > 0.0 && atom.gamma2.is_finite()) {
        return Err(domain("gamma2", "must be finite and > 0"));
    }
    for (name, g) in [("gamma3", atom.gamma3), ("gamma4", atom.gamma4)] {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(domain(name, "must be finite and >= 0"));
        }
    }
    drive.validate()?;
    let m1 = first_order_matrix(atom, drive);
    let d = diffusion_matrices(atom);

    let mut modes = Vec::new();
    let mut scale = atom.gamma2;
    for mu in eigenvalues(DMatrix::from_iterator(3, 3, m1.iter().copied())) {
        // (M1 + i omega) is singular at omega = i mu.
        modes.push(Resonance {
            center: -mu.im,
            half_width: mu.re.abs(),
        });
        scale = scale.max(mu.norm());
    }
    let cutoff = 1e7 * scale;
    let rule = QuadratureRule::graded_simpson(-cutoff, cutoff, 401, 16, &modes, 2f64.sqrt())?;

    let integrals = rule.try_integrate(|omega| {
        let r = response_at(&m1, omega).ok_or(())?;
        let row = [
            r[(0, 0)].norm_sqr(),
            r[(0, 1)].norm_sqr(),
            r[(0, 2)].norm_sqr(),
        ];
        let probe = d.d1[(0, 0)] * row[0];
        let full = (0..3).map(|m| d.d1[(m, m)] * row[m]).sum::<f64>();
        let normal = (0..3).map(|m| d.d2[(m, m)] * row[m]).sum::<f64>();
        Ok::<_, ()>(Vector3::new(probe, full, normal))
    });
    let integrals = integrals.map_err(|(omega, ())| Error::Singular {
        context: format!("first-order propagator at omega = {omega:e}"),
    })?;
    // Beyond the cutoff only |R11|^2 ~ 1/omega^2 survives.
    let tail = 2.0 * atom.gamma2 / cutoff;
    let norm = 1.0 / crate::constants::TWO_PI;
    let probe = (integrals[0] + tail) * norm;
    let full = (integrals[1] + tail) * norm;
    Ok(VacuumCorrelatorReport {
        deviation: (1.0 - probe).abs(),
        full_model_residual: (1.0 - full).abs(),
        normally_ordered: integrals[2] * norm,
        warnings: atom.warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use crate::medium::resonance_fraction;
    use proptest::prelude::*;

    fn atom() -> LadderAtom {
        LadderAtom::cold_default()
    }

    #[test]
    fn ground_state_coherence_matches_susceptibility_fraction() {
        let a = atom();
        let drive = Drive {
            delta_p: 2e6,
            delta_c: -1e6,
            delta_mw: 5e5,
            ..Drive::resonant(TWO_PI * 3e6, TWO_PI * 2e5)
        };
        let sol = first_order_coherences(&a, &drive, &SteadyState::ground(), 0.0).unwrap();
        let expected = -Complex64::i() * resonance_fraction(&a, &drive).unwrap();
        assert!((sol.sigma12 - expected).norm() <= 1e-12 * expected.norm());
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn two_level_limit() {
        let a = atom();
        let sol =
            first_order_coherences(&a, &Drive::resonant(0.0, 0.0), &SteadyState::ground(), 0.0)
                .unwrap();
        let expected = Complex64::new(0.0, -2.0 / a.gamma2);
        assert!((sol.sigma12 - expected).norm() <= 1e-14 * expected.norm());
        assert_eq!(sol.sigma13, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn response_vanishes_at_high_frequency() {
        let a = atom();
        let drive = Drive::resonant(TWO_PI * 3e6, TWO_PI * 2e5);
        let ss = SteadyState::ground();
        let low = first_order_coherences(&a, &drive, &ss, 0.0).unwrap();
        let high = first_order_coherences(&a, &drive, &ss, 1e15).unwrap();
        assert!(high.response_matrix.norm() < 1e-6 * low.response_matrix.norm());
        assert!(high.response_matrix.norm() < 2e-15);
    }

    #[test]
    fn diffusion_is_diagonal_and_d2_vanishes() {
        let a = LadderAtom {
            gamma2: TWO_PI * 6e6,
            ..atom()
        };
        let d = diffusion_matrices(&a);
        assert_eq!(d.d1[(0, 0)], TWO_PI * 6e6);
        assert_eq!(d.d1[(1, 1)], a.gamma3);
        assert_eq!(d.d1[(2, 2)], a.gamma4);
        assert_eq!(d.d2, Matrix3::zeros());
        assert_eq!(d.d1, d.d1.transpose());
    }

    /// Frequency integral of `R D R^dagger` equals the Lyapunov solution
    /// `P` of `G P + P G^dagger = D` with `G = -M1`.
    fn lyapunov_11(m1: &Matrix3<Complex64>, d: &Matrix3<f64>) -> f64 {
        let g = -m1;
        let mut lhs = DMatrix::<Complex64>::zeros(9, 9);
        for a in 0..3 {
            for b in 0..3 {
                let row = a + 3 * b;
                for k in 0..3 {
                    lhs[(row, k + 3 * b)] += g[(a, k)];
                    lhs[(row, a + 3 * k)] += g[(b, k)].conj();
                }
            }
        }
        let rhs = DMatrix::from_iterator(9, 1, d.iter().map(|&x| Complex64::new(x, 0.0)));
        let p = lhs.lu().solve(&rhs).unwrap();
        p[(0, 0)].re
    }

    #[test]
    fn frequency_integral_matches_lyapunov_oracle() {
        let a = LadderAtom {
            gamma3: 0.02 * atom().gamma2,
            gamma4: 0.05 * atom().gamma2,
            ..atom()
        };
        let drive = Drive {
            delta_p: 1e6,
            delta_c: -4e6,
            ..Drive::resonant(TWO_PI * 4e6, TWO_PI * 1e6)
        };
        let report = vacuum_correlator_check(&a, &drive).unwrap();
        let m1 = first_order_matrix(&a, &drive);
        let mut probe_only = Matrix3::zeros();
        probe_only[(0, 0)] = a.gamma2;
        let oracle = lyapunov_11(&m1, &probe_only);
        assert!(
            (report.deviation - (1.0 - oracle).abs()).abs() < 1e-7,
            "{report:?} vs {oracle}"
        );
        assert!(report.full_model_residual < 1e-7);
        assert_eq!(report.normally_ordered, 0.0);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn correlator_exact_without_upper_decay() {
        let a = LadderAtom {
            gamma3: 0.0,
            gamma4: 0.0,
            ..atom()
        };
        let report =
            vacuum_correlator_check(&a, &Drive::resonant(TWO_PI * 4e6, TWO_PI * 1e6)).unwrap();
        assert!(report.deviation < 1e-8, "{report:?}");
    }

    #[test]
    fn correlator_deviation_is_small_for_weak_upper_decay() {
        let g2 = atom().gamma2;
        let a = LadderAtom {
            gamma3: 1e-3 * g2,
            gamma4: 1e-3 * g2,
            ..atom()
        };
        let report =
            vacuum_correlator_check(&a, &Drive::resonant(TWO_PI * 4e6, TWO_PI * 1e6)).unwrap();
        assert!(report.deviation <= 1e-2, "{report:?}");
    }

    #[test]
    fn strong_upper_decay_is_flagged_but_evaluated() {
        let g2 = atom().gamma2;
        let a = LadderAtom {
            gamma3: 0.5 * g2,
            ..atom()
        };
        let report =
            vacuum_correlator_check(&a, &Drive::resonant(TWO_PI * 4e6, TWO_PI * 1e6)).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert!(report.deviation > 0.0 && report.deviation < 1.0);
    }

    #[test]
    fn deviation_grows_with_upper_decay() {
        let base = atom();
        let drive = Drive::resonant(TWO_PI * 4e6, TWO_PI * 1e6);
        let mut last = -1.0;
        for ratio in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.3] {
            let a = LadderAtom {
                gamma3: ratio * base.gamma2,
                gamma4: ratio * base.gamma2,
                ..base
            };
            let dev = vacuum_correlator_check(&a, &drive).unwrap().deviation;
            assert!(dev >= last, "ratio {ratio}: {dev} < {last}");
            last = dev;
        }
    }

    fn rate() -> impl Strategy<Value = f64> {
        (5.0f64..8.0).prop_map(|e| 10f64.powf(e))
    }

    fn detuning() -> impl Strategy<Value = f64> {
        (-1.0f64..1.0).prop_map(|x| x * 1e8)
    }

    proptest! {
        #[test]
        fn coherence_fraction_consistency(
            wc in rate(), wm in rate(), dp in detuning(), dc in detuning(), dm in detuning()
        ) {
            let a = atom();
            let drive = Drive { delta_p: dp, delta_c: dc, delta_mw: dm, ..Drive::resonant(wc, wm) };
            let sol = first_order_coherences(&a, &drive, &SteadyState::ground(), 0.0).unwrap();
            let expected = -Complex64::i() * resonance_fraction(&a, &drive).unwrap();
            prop_assert!((sol.sigma12 - expected).norm() <= 1e-10 * expected.norm());
            prop_assert!(sol.residual <= 1e-10);
        }
    }
}
