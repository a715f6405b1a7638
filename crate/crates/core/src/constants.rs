//! CODATA 2018 exact and recommended values in SI units.

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
/// Boltzmann constant (J/K).
pub const KB: f64 = 1.380_649e-23;
/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// The constant set used throughout the crate, bundled for callers that
/// want to echo or inspect it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub epsilon0: f64,
    pub kb: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        epsilon0: EPSILON0,
        kb: KB,
        c: C,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA2018
    }
}
