//! Four-level ladder medium |1> -> |2> -> |3> -> |4>: probe on 1-2, coupling
//! laser on 2-3 and a microwave dressing field on the Rydberg transition 3-4.
//!
//! Rates and Rabi frequencies are angular (rad/s). Detunings follow
//! `Delta = omega_atom - omega_field`.

mod coherence;
mod liouvillian;
mod steady_state;

pub use coherence::{
    diffusion_matrices, first_order_coherences, first_order_matrix, vacuum_correlator_check,
    CoherenceSolution, DiffusionMatrices, VacuumCorrelatorReport,
};
pub use liouvillian::{hamiltonian, liouvillian, liouvillian_steady_state, steady_state_gap};
pub use steady_state::{reference_zeroth_order_system, steady_state, SteadyState};

use num_complex::Complex64;

use crate::constants::{EPSILON0, HBAR, TWO_PI};
use crate::error::{domain, Error, Result};

/// Condition numbers above this attach a warning to solver results.
pub const CONDITION_WARNING: f64 = 1e12;

/// Ratio `gamma_3 / gamma_2` (and `gamma_4 / gamma_2`) above which the
/// vacuum-correlator approximation is flagged.
pub const WEAK_DECAY_RATIO: f64 = 0.1;

/// Atomic constants of the ladder and the sample geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderAtom {
    /// Decay of |2> (rad/s).
    pub gamma2: f64,
    /// Decay of |3> (rad/s).
    pub gamma3: f64,
    /// Decay of |4> (rad/s).
    pub gamma4: f64,
    /// Dipole moments (C m).
    pub mu21: f64,
    pub mu32: f64,
    pub mu43: f64,
    /// Atomic density (m^-3).
    pub density: f64,
    /// Medium length (m).
    pub length: f64,
    /// Probe and coupling wavenumbers (1/m).
    pub k_probe: f64,
    pub k_coupling: f64,
    /// Atomic mass (kg).
    pub mass: f64,
}

/// Rubidium-87 mass; matches the 780 nm / 480 nm ladder used by the presets.
pub const RB87_MASS: f64 = 1.443_160_648e-25;

impl LadderAtom {
    /// Laser-cooled sample. Decay rates, wavelengths and mass describe a
    /// Rb-like 5S-5P-nD-(n+1)P ladder; dipoles, density and length are
    /// assumptions (see the README preset table).
    pub fn cold_default() -> Self {
        Self {
            gamma2: TWO_PI * 5.2e6,
            gamma3: TWO_PI * 1e3,
            gamma4: TWO_PI * 1e3,
            mu21: 1.0e-29,
            mu32: 1.0e-31,
            mu43: 4.0e-26,
            density: 1e16,
            length: 1e-2,
            k_probe: TWO_PI / 780e-9,
            k_coupling: TWO_PI / 480e-9,
            mass: RB87_MASS,
        }
    }

    /// Room-temperature vapor: same atom, a thousand times denser.
    pub fn hot_default() -> Self {
        Self {
            density: 1e19,
            ..Self::cold_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("mu21", self.mu21),
            ("mu32", self.mu32),
            ("mu43", self.mu43),
            ("density", self.density),
            ("length", self.length),
            ("k_probe", self.k_probe),
            ("k_coupling", self.k_coupling),
            ("mass", self.mass),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(domain(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Human-readable notes on approximations that the parameters strain.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gamma3 > WEAK_DECAY_RATIO * self.gamma2 {
            out.push(format!(
                "gamma3/gamma2 = {:.3e} is not small; vacuum-noise approximation degrades",
                self.gamma3 / self.gamma2
            ));
        }
        if self.gamma4 > WEAK_DECAY_RATIO * self.gamma2 {
            out.push(format!(
                "gamma4/gamma2 = {:.3e} is not small; vacuum-noise approximation degrades",
                self.gamma4 / self.gamma2
            ));
        }
        out
    }

    /// `N |mu21|^2 / (epsilon0 hbar)` in rad/s.
    pub fn susceptibility_prefactor(&self) -> f64 {
        self.density * self.mu21 * self.mu21 / (EPSILON0 * HBAR)
    }
}

/// Classical coupling and microwave fields plus the three single-photon
/// detunings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub omega_c: Complex64,
    pub omega_mw: Complex64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_mw: f64,
}

impl Drive {
    /// Real Rabi frequencies, all detunings zero.
    pub fn resonant(omega_c: f64, omega_mw: f64) -> Self {
        Self {
            omega_c: Complex64::new(omega_c, 0.0),
            omega_mw: Complex64::new(omega_mw, 0.0),
            delta_p: 0.0,
            delta_c: 0.0,
            delta_mw: 0.0,
        }
    }

    /// Three-photon detuning `Delta_c + Delta_MW + Delta_p`.
    pub fn total_detuning(&self) -> f64 {
        self.delta_c + self.delta_mw + self.delta_p
    }

    pub fn with_mw(mut self, omega_mw: f64) -> Self {
        self.omega_mw = Complex64::new(omega_mw, 0.0);
        self
    }

    pub fn with_coupling_detuning(mut self, delta_c: f64) -> Self {
        self.delta_c = delta_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_c", self.omega_c.re),
            ("omega_c", self.omega_c.im),
            ("omega_mw", self.omega_mw.re),
            ("omega_mw", self.omega_mw.im),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("delta_mw", self.delta_mw),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(domain(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Complex coherence decay rates of the three probe-connected coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexLinewidths {
    pub gamma12: Complex64,
    pub gamma13: Complex64,
    pub gamma14: Complex64,
}

impl ComplexLinewidths {
    /// `Gamma13 Gamma14 + |Omega_MW|^2 / 4`.
    pub fn numerator(&self, drive: &Drive) -> Complex64 {
        self.gamma13 * self.gamma14 + drive.omega_mw.norm_sqr() / 4.0
    }

    /// `Gamma12 [Gamma13 Gamma14 + |Omega_MW|^2/4] + |Omega_c|^2/4 Gamma14`.
    pub fn denominator(&self, drive: &Drive) -> Complex64 {
        self.gamma12 * self.numerator(drive) + self.gamma14 * (drive.omega_c.norm_sqr() / 4.0)
    }
}

pub fn complex_linewidths(atom: &LadderAtom, drive: &Drive) -> ComplexLinewidths {
    ComplexLinewidths {
        gamma12: Complex64::new(atom.gamma2 / 2.0, drive.delta_p),
        gamma13: Complex64::new(atom.gamma3 / 2.0, drive.delta_p + drive.delta_c),
        gamma14: Complex64::new(atom.gamma4 / 2.0, drive.total_detuning()),
    }
}

/// Rabi frequency `mu E / hbar` (rad/s) of a field `E` (V/m) on a transition
/// with dipole `mu` (C m).
pub fn rabi_from_field(mu: f64, field: f64) -> f64 {
    mu * field / HBAR
}

/// Inverse of [`rabi_from_field`].
pub fn field_from_rabi(mu: f64, rabi: f64) -> f64 {
    rabi * HBAR / mu
}

/// Linear probe response of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumResponse {
    /// Dimensionless susceptibility; `Im chi > 0` is absorption.
    pub chi: Complex64,
    /// Amplitude absorption index: the probe amplitude is damped by `exp(-epsilon)`.
    pub epsilon: f64,
    /// Dispersion index (rad).
    pub phi: f64,
}

impl MediumResponse {
    /// `epsilon + i phi = -i chi k_p l`.
    pub fn from_chi(chi: Complex64, k_probe: f64, length: f64) -> Self {
        let kl = k_probe * length;
        Self {
            chi,
            epsilon: chi.im * kl,
            phi: -chi.re * kl,
        }
    }

    /// Intensity transmission `exp(-2 epsilon)`.
    pub fn transmission(&self) -> f64 {
        transmission(self)
    }
}

/// The resonance fraction shared by the susceptibility and the first-order
/// coherence: `(Gamma13 Gamma14 + |Omega_MW|^2/4) / S`.
pub fn resonance_fraction(atom: &LadderAtom, drive: &Drive) -> Result<Complex64> {
    let lw = complex_linewidths(atom, drive);
    let den = lw.denominator(drive);
    if den.norm_sqr() == 0.0 || !den.is_finite() {
        return Err(Error::Singular {
            context: format!("{drive:?} with {atom:?}"),
        });
    }
    Ok(lw.numerator(drive) / den)
}

/// Steady-state probe susceptibility of the microwave-dressed ladder.
pub fn susceptibility(atom: &LadderAtom, drive: &Drive) -> Result<MediumResponse> {
    atom.validate()?;
    drive.validate()?;
    let chi = Complex64::i() * atom.susceptibility_prefactor() * resonance_fraction(atom, drive)?;
    Ok(MediumResponse::from_chi(chi, atom.k_probe, atom.length))
}

/// Intensity transmission of the probe through the medium.
pub fn transmission(response: &MediumResponse) -> f64 {
    (-2.0 * response.epsilon).exp()
}
