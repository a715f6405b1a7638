//! Maxwell-Boltzmann averaging of the probe response for thermal vapor.

use num_complex::Complex64;

use crate::constants::{KB, TWO_PI};
use crate::error::{domain, Error, Result};
use crate::medium::{complex_linewidths, resonance_fraction, Drive, LadderAtom, MediumResponse};
use crate::numeric::{poly_add, poly_mul, polynomial_roots, QuadratureRule, Resonance};

/// Cutoff in thermal widths used by [`ThermalEnsemble::new`].
pub const DEFAULT_CUTOFF_WIDTHS: f64 = 5.0;
pub const DEFAULT_POINTS: usize = 201;
pub const DEFAULT_PANEL_INTERVALS: usize = 8;
/// Ratio between successive panel edges around a pole of the integrand.
pub const POLE_GRADING: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamGeometry {
    /// Probe and coupling beams travel in opposite directions.
    CounterPropagating,
    CoPropagating,
}

impl BeamGeometry {
    /// Sign `s` in `Delta_c' = Delta_c + s k_c v`.
    fn coupling_sign(self) -> f64 {
        match self {
            BeamGeometry::CounterPropagating => -1.0,
            BeamGeometry::CoPropagating => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalEnsemble {
    /// Kelvin.
    pub temperature: f64,
    /// kg.
    pub mass: f64,
    /// Integration cutoff (m/s).
    pub v_max: f64,
    /// Nodes of the uniform base grid (odd).
    pub n_points: usize,
    /// Simpson subintervals per panel of the pole-graded mesh (even).
    pub panel_intervals: usize,
    pub geometry: BeamGeometry,
    /// Adds geometric panels around the complex poles of the integrand.
    /// Without it the rule is plain composite Simpson on `n_points` nodes.
    pub pole_refinement: bool,
}

impl ThermalEnsemble {
    /// Counter-propagating beams, cutoff at five thermal widths.
    pub fn new(temperature: f64, mass: f64) -> Result<Self> {
        let ens = Self {
            temperature,
            mass,
            v_max: DEFAULT_CUTOFF_WIDTHS * (KB * temperature / mass).sqrt(),
            n_points: DEFAULT_POINTS,
            panel_intervals: DEFAULT_PANEL_INTERVALS,
            geometry: BeamGeometry::CounterPropagating,
            pole_refinement: true,
        };
        ens.validate()?;
        Ok(ens)
    }

    /// Room-temperature vapor (295 K).
    pub fn room_temperature(mass: f64) -> Result<Self> {
        Self::new(295.0, mass)
    }

    /// One-dimensional thermal velocity `sqrt(kB T / M)`.
    pub fn thermal_velocity(&self) -> f64 {
        (KB * self.temperature / self.mass).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(domain(
                "temperature",
                format!("must be finite and > 0, got {}", self.temperature),
            ));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(domain(
                "mass",
                format!("must be finite and > 0, got {}", self.mass),
            ));
        }
        // Small slack so that exactly five widths passes after rounding.
        let min_cutoff = DEFAULT_CUTOFF_WIDTHS * self.thermal_velocity() * (1.0 - 1e-12);
        if !(self.v_max >= min_cutoff && self.v_max.is_finite()) {
            return Err(domain(
                "v_max",
                format!(
                    "must be >= {min_cutoff:e} m/s (five thermal widths), got {}",
                    self.v_max
                ),
            ));
        }
        if self.n_points < 3 || self.n_points.is_multiple_of(2) {
            return Err(domain(
                "n_points",
                format!("must be odd and >= 3, got {}", self.n_points),
            ));
        }
        if self.panel_intervals < 2 || self.panel_intervals % 2 == 1 {
            return Err(domain(
                "panel_intervals",
                format!("must be even and >= 2, got {}", self.panel_intervals),
            ));
        }
        Ok(())
    }
}

/// One-dimensional Maxwell-Boltzmann density (s/m).
pub fn mb_density(ens: &ThermalEnsemble, v: f64) -> f64 {
    let a = ens.mass / (KB * ens.temperature);
    (a / TWO_PI).sqrt() * (-0.5 * a * v * v).exp()
}

/// The drive seen by atoms moving with velocity `v` along the probe beam.
pub fn shifted_drive(drive: &Drive, atom: &LadderAtom, v: f64, geometry: BeamGeometry) -> Drive {
    Drive {
        delta_p: drive.delta_p + atom.k_probe * v,
        delta_c: drive.delta_c + geometry.coupling_sign() * atom.k_coupling * v,
        ..*drive
    }
}

/// Complex velocities where the susceptibility denominator vanishes, as
/// resonances of the velocity integrand.
pub fn velocity_poles(atom: &LadderAtom, drive: &Drive, geometry: BeamGeometry) -> Vec<Resonance> {
    let lw = complex_linewidths(atom, drive);
    let i = Complex64::i();
    let kp = atom.k_probe;
    let kc = geometry.coupling_sign() * atom.k_coupling;
    // Each linewidth is affine in v.
    let g12 = [lw.gamma12, i * kp];
    let g13 = [lw.gamma13, i * (kp + kc)];
    let g14 = [lw.gamma14, i * (kp + kc)];
    let mw = Complex64::new(drive.omega_mw.norm_sqr() / 4.0, 0.0);
    let c = Complex64::new(drive.omega_c.norm_sqr() / 4.0, 0.0);
    let inner = poly_add(&poly_mul(&g13, &g14), &[mw]);
    let den = poly_add(&poly_mul(&g12, &inner), &poly_mul(&[c], &g14));
    polynomial_roots(&den)
        .into_iter()
        .filter(|z| z.is_finite())
        .map(|z| Resonance {
            center: z.re,
            half_width: z.im.abs(),
        })
        .collect()
}

/// Velocity nodes and density-weighted quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityMesh {
    rule: QuadratureRule,
}

impl VelocityMesh {
    pub fn new(atom: &LadderAtom, drive: &Drive, ens: &ThermalEnsemble) -> Result<Self> {
        Self::covering(atom, std::slice::from_ref(drive), ens)
    }

    /// One mesh refined around the poles of every drive, so that all of them
    /// are integrated accurately on shared nodes.
    pub fn covering(atom: &LadderAtom, drives: &[Drive], ens: &ThermalEnsemble) -> Result<Self> {
        ens.validate()?;
        let rule = if ens.pole_refinement {
            let poles: Vec<Resonance> = drives
                .iter()
                .flat_map(|d| velocity_poles(atom, d, ens.geometry))
                .collect();
            QuadratureRule::graded_simpson(
                -ens.v_max,
                ens.v_max,
                ens.n_points,
                ens.panel_intervals,
                &poles,
                POLE_GRADING,
            )?
        } else {
            QuadratureRule::simpson_uniform(-ens.v_max, ens.v_max, ens.n_points)?
        };
        Ok(Self {
            rule: rule.weighted_by(|v| mb_density(ens, v)),
        })
    }

    pub fn velocities(&self) -> &[f64] {
        self.rule.nodes()
    }

    /// Quadrature weights including the Maxwell-Boltzmann density.
    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }
}

/// Velocity-averaged susceptibility on the mesh built for `drive`.
pub fn doppler_averaged_response(
    atom: &LadderAtom,
    drive: &Drive,
    ens: &ThermalEnsemble,
) -> Result<MediumResponse> {
    let mesh = VelocityMesh::new(atom, drive, ens)?;
    averaged_on_mesh(atom, drive, ens.geometry, &mesh)
}

/// Velocity average on a caller-supplied mesh. Reusing one mesh for nearby
/// drives keeps finite differences free of mesh noise.
pub fn averaged_on_mesh(
    atom: &LadderAtom,
    drive: &Drive,
    geometry: BeamGeometry,
    mesh: &VelocityMesh,
) -> Result<MediumResponse> {
    atom.validate()?;
    drive.validate()?;
    let fraction = mesh
        .rule
        .try_integrate(|v| resonance_fraction(atom, &shifted_drive(drive, atom, v, geometry)));
    let fraction = fraction.map_err(|(v, err)| match err {
        Error::Singular { .. } => Error::Singular {
            context: format!("velocity node v = {v:e} m/s"),
        },
        other => other,
    })?;
    let chi = Complex64::i() * atom.susceptibility_prefactor() * fraction;
    Ok(MediumResponse::from_chi(chi, atom.k_probe, atom.length))
}
