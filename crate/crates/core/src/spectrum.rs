//! Probe transmission against the coupling detuning: scans, transparency
//! linewidth and Autler-Townes splitting.

use rayon::prelude::*;

use crate::doppler::{doppler_averaged_response, ThermalEnsemble};
use crate::engine::{with_pool, EngineSettings};
use crate::error::{domain, Error, Result};
use crate::medium::{susceptibility, Drive, LadderAtom, MediumResponse};
use crate::numeric::golden_section;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta_c: f64,
    pub transmission: f64,
    pub epsilon: f64,
    pub phi: f64,
}

fn response_at(
    atom: &LadderAtom,
    drive: &Drive,
    delta_c: f64,
    ens: Option<&ThermalEnsemble>,
) -> Result<MediumResponse> {
    let d = drive.with_coupling_detuning(delta_c);
    match ens {
        None => susceptibility(atom, &d),
        Some(e) => doppler_averaged_response(atom, &d, e),
    }
}

pub fn transmission_scan(
    atom: &LadderAtom,
    drive: &Drive,
    delta_c_axis: &[f64],
    ensemble: Option<&ThermalEnsemble>,
    settings: &EngineSettings,
) -> Result<Vec<SpectrumPoint>> {
    if delta_c_axis.is_empty() {
        return Err(domain("delta_c_axis", "axis is empty"));
    }
    with_pool(settings, || {
        delta_c_axis
            .par_iter()
            .map(|&dc| {
                response_at(atom, drive, dc, ensemble).map(|r| SpectrumPoint {
                    delta_c: dc,
                    transmission: r.transmission(),
                    epsilon: r.epsilon,
                    phi: r.phi,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Full width at half height of the transparency window around
/// `drive.delta_c`, measured between the peak transmission and the
/// far-detuned level.
pub fn eit_linewidth(
    atom: &LadderAtom,
    drive: &Drive,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<f64> {
    let center = drive.delta_c;
    let t = |dc: f64| response_at(atom, drive, dc, ensemble).map(|r| r.transmission());
    let far = 1e3 * (drive.omega_c.norm() + atom.gamma2);
    let peak = t(center)?;
    let base = 0.5 * (t(center + far)? + t(center - far)?);
    if !(peak > base) {
        return Err(Error::Numerical(format!(
            "no transparency window at Delta_c = {center:e} (peak {peak:e}, far level {base:e})"
        )));
    }
    let half = 0.5 * (peak + base);
    let mut width = 0.0;
    for side in [1.0, -1.0] {
        let mut inner = 0.0;
        let mut outer = 0.25 * (atom.gamma3 + atom.gamma4).max(1.0);
        while t(center + side * outer)? > half {
            inner = outer;
            outer *= 2.0;
            if outer > far {
                return Err(Error::Numerical(
                    "transparency window does not close".into(),
                ));
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (inner + outer);
            if t(center + side * mid)? > half {
                inner = mid;
            } else {
                outer = mid;
            }
            if outer - inner <= 1e-12 * outer {
                break;
            }
        }
        width += 0.5 * (inner + outer);
    }
    Ok(width)
}

/// Coupling detunings of the local absorption minima (transmission maxima)
/// within `+-span`, located on an `n_points` grid and refined by
/// golden-section search. Sorted by depth, deepest first.
pub fn absorption_minima(
    atom: &LadderAtom,
    drive: &Drive,
    ensemble: Option<&ThermalEnsemble>,
    span: f64,
    n_points: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(span > 0.0) || n_points < 5 {
        return Err(domain("span", "need span > 0 and at least five points"));
    }
    let axis: Vec<f64> = (0..n_points)
        .map(|k| drive.delta_c - span + 2.0 * span * k as f64 / (n_points - 1) as f64)
        .collect();
    let eps = axis
        .iter()
        .map(|&dc| response_at(atom, drive, dc, ensemble).map(|r| r.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let mut minima = Vec::new();
    for k in 1..n_points - 1 {
        if eps[k] < eps[k - 1] && eps[k] <= eps[k + 1] {
            let (x, fx) = golden_section(
                |dc| response_at(atom, drive, dc, ensemble).map_or(f64::INFINITY, |r| r.epsilon),
                axis[k - 1],
                axis[k + 1],
                1e-9,
            );
            let (x, fx) = if fx <= eps[k] {
                (x, fx)
            } else {
                (axis[k], eps[k])
            };
            minima.push((x, fx));
        }
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(minima)
}

/// Separation of the two transparency peaks of the microwave-split window.
pub fn autler_townes_separation(
    atom: &LadderAtom,
    drive: &Drive,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<f64> {
    let omega = drive.omega_mw.norm();
    if !(omega > 0.0) {
        return Err(domain("omega_mw", "needs a dressing field"));
    }
    let minima = absorption_minima(atom, drive, ensemble, 1.5 * omega, 4001)?;
    match minima.as_slice() {
        [a, b, ..] => Ok((a.0 - b.0).abs()),
        _ => Err(Error::Numerical(format!(
            "found {} transparency peaks, expected two",
            minima.len()
        ))),
    }
}
