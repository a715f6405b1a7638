use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{format_float, RunConfig};
use super::csv::{Cell, Table};
use super::CliError;
use crate::constants::TWO_PI;
use crate::detection::{enhancement_limit, quantum_enhancement};
use crate::doppler::{ThermalEnsemble, VelocityMesh};
use crate::engine::{
    convergence_check, evaluate, sensitivity_map, with_pool, Convergence, OperatingPoint, Readout,
    RESOLUTION_FACTOR,
};
use crate::medium::{
    first_order_coherences, liouvillian_steady_state, resonance_fraction, steady_state,
    steady_state_gap, susceptibility, vacuum_correlator_check,
};
use crate::spectrum::autler_townes_separation;
use crate::{Error, Result};

/// Tolerances reported by `verify`.
pub const LIOUVILLIAN_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const FRACTION_TOL: f64 = 1e-10;
pub const VACUUM_DEVIATION_TOL: f64 = 1e-2;
pub const VACUUM_RESIDUAL_TOL: f64 = 1e-6;
pub const NORMALIZATION_TOL: f64 = 1e-6;
pub const ORDER_TOL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    EnhancementCurve,
    TransmissionScan,
    SensitivityMap,
    LineScan,
    Susceptibility,
    SteadyState,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::EnhancementCurve,
        Subcommand::TransmissionScan,
        Subcommand::SensitivityMap,
        Subcommand::LineScan,
        Subcommand::Susceptibility,
        Subcommand::SteadyState,
        Subcommand::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::EnhancementCurve => "enhancement-curve",
            Subcommand::TransmissionScan => "transmission-scan",
            Subcommand::SensitivityMap => "sensitivity-map",
            Subcommand::LineScan => "line-scan",
            Subcommand::Susceptibility => "susceptibility",
            Subcommand::SteadyState => "steady-state",
            Subcommand::Verify => "verify",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Result table plus the failed cells, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub errors: Option<Table>,
}

impl RunOutput {
    fn complete(table: Table) -> Self {
        Self {
            table,
            errors: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.errors.is_some()
    }
}

fn error_table(title: &str) -> Table {
    Table::new(
        format!("{title} failures"),
        &["index", "delta_c [Hz]", "e_mw [V/m]", "error"],
    )
}

fn collect_failures(title: &str, rows: Vec<Vec<Cell>>) -> Option<Table> {
    if rows.is_empty() {
        return None;
    }
    let mut t = error_table(title);
    for r in rows {
        t.push(r);
    }
    Some(t)
}

pub fn run(sub: Subcommand, config: &RunConfig) -> Result<RunOutput> {
    let title = sub.name();
    match sub {
        Subcommand::EnhancementCurve => enhancement(config, title),
        Subcommand::TransmissionScan => transmission(config, title),
        Subcommand::SensitivityMap => map(config, title),
        Subcommand::LineScan => line(config, title),
        Subcommand::Susceptibility => point_susceptibility(config, title),
        Subcommand::SteadyState => point_steady_state(config, title),
        Subcommand::Verify => verify(config, title),
    }
}

fn enhancement(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let mut t = Table::new(
        title,
        &[
            "epsilon [1]",
            "exp(-2 epsilon) [1]",
            "r [1]",
            "g_s [1]",
            "g_q [1]",
            "g_q_limit [1]",
        ],
    );
    for eps in config.sweep_epsilon.values() {
        let limit = enhancement_limit(eps);
        for r in config.sweep_r.values() {
            t.push(vec![
                eps.into(),
                (-2.0 * eps).exp().into(),
                r.into(),
                r.exp().into(),
                quantum_enhancement(r, eps).into(),
                limit.into(),
            ]);
        }
    }
    Ok(RunOutput::complete(t))
}

fn ensemble(config: &RunConfig) -> Option<ThermalEnsemble> {
    config.thermal_ensemble()
}

fn response(config: &RunConfig, delta_c_hz: f64) -> Result<crate::medium::MediumResponse> {
    let atom = config.atom();
    let drive = config.drive().with_coupling_detuning(TWO_PI * delta_c_hz);
    match ensemble(config) {
        Some(ens) => crate::doppler::doppler_averaged_response(&atom, &drive, &ens),
        None => susceptibility(&atom, &drive),
    }
}

fn transmission(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let axis = config.sweep_delta_c_hz.values();
    let results = with_pool(&config.settings(), || {
        axis.par_iter()
            .map(|&dc| response(config, dc))
            .collect::<Vec<_>>()
    })?;
    let mut t = Table::new(
        title,
        &[
            "delta_c [Hz]",
            "transmission [1]",
            "epsilon [1]",
            "phi [rad]",
        ],
    );
    let drive = config.drive();
    t.note(format!(
        "omega_mw [Hz] = {}",
        format_float(drive.omega_mw.re / TWO_PI)
    ));
    if drive.omega_mw.re > 0.0 {
        let ens = ensemble(config);
        match autler_townes_separation(&config.atom(), &drive, ens.as_ref()) {
            Ok(sep) => t.note(format!(
                "transparency peak separation [Hz] = {}",
                format_float(sep / TWO_PI)
            )),
            Err(e) => t.note(format!("transparency peak separation unresolved: {e}")),
        }
    }
    let mut failures = Vec::new();
    for (k, (dc, res)) in axis.iter().zip(results).enumerate() {
        match res {
            Ok(r) => t.push(vec![
                (*dc).into(),
                r.transmission().into(),
                r.epsilon.into(),
                r.phi.into(),
            ]),
            Err(e) => {
                t.push(vec![(*dc).into(), Cell::Empty, Cell::Empty, Cell::Empty]);
                failures.push(vec![
                    Cell::Int(k),
                    (*dc).into(),
                    config.e_mw_v_per_m.into(),
                    Cell::Text(e.to_string()),
                ]);
            }
        }
    }
    Ok(RunOutput {
        table: t,
        errors: collect_failures(title, failures),
    })
}

fn map(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let dc_hz = config.sweep_delta_c_hz.values();
    let dc: Vec<f64> = dc_hz.iter().map(|x| TWO_PI * x).collect();
    let e_axis = config.sweep_e_mw.values();
    let ens = ensemble(config);
    let readout = config.readout();
    let m = sensitivity_map(
        &config.atom(),
        &config.drive(),
        readout,
        &dc,
        &e_axis,
        ens.as_ref(),
        &config.settings(),
    )?;
    let mut t = Table::new(
        title,
        &[
            "delta_c [Hz]",
            "e_mw [V/m]",
            "epsilon [1]",
            "deps_de [m/V]",
            "delta_e [V/m]",
            "g_q [1]",
        ],
    );
    t.note(format!("readout = {}", readout.name()));
    if let Some(opt) = &m.optimum {
        for (label, r) in [("grid", &opt.grid), ("refined", &opt.refined)] {
            t.note(format!(
                "optimum {label}: delta_c [Hz] = {}, e_mw [V/m] = {}, delta_e [V/m] = {}",
                format_float(r.delta_c / TWO_PI),
                format_float(r.e_mw),
                format_float(r.delta_e)
            ));
        }
    }
    for (i, row) in m.values.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let mut cells = vec![dc_hz[i].into(), e_axis[j].into()];
            match cell {
                Some(r) => cells.extend([
                    r.epsilon.into(),
                    r.deps_de.into(),
                    r.delta_e.into(),
                    r.g_q.into(),
                ]),
                None => cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            t.push(cells);
        }
    }
    let failures = m
        .failures
        .iter()
        .map(|f| {
            vec![
                Cell::Int(f.i * e_axis.len() + f.j),
                dc_hz[f.i].into(),
                f.e_mw.into(),
                Cell::Text(f.error.to_string()),
            ]
        })
        .collect();
    Ok(RunOutput {
        table: t,
        errors: collect_failures(title, failures),
    })
}

fn line(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let atom = config.atom();
    let drive = config.drive();
    let ens = ensemble(config);
    let settings = config.settings();
    let axis = config.sweep_e_mw.values();
    let readouts = [
        Readout::Coherent {
            alpha: config.alpha,
        },
        Readout::Squeezed {
            alpha: config.alpha,
            r: config.r,
        },
    ];
    let results = with_pool(&settings, || {
        axis.par_iter()
            .map(|&e_mw| {
                let eval = |readout| {
                    evaluate(
                        &atom,
                        &OperatingPoint {
                            drive,
                            e_mw,
                            readout,
                            ensemble: ens,
                        },
                        &settings,
                    )
                };
                Ok((eval(readouts[0])?, eval(readouts[1])?))
            })
            .collect::<Vec<Result<_>>>()
    })?;
    let mut t = Table::new(
        title,
        &[
            "e_mw [V/m]",
            "epsilon [1]",
            "deps_de [m/V]",
            "delta_e_coherent [V/m]",
            "delta_e_squeezed [V/m]",
            "g_q [1]",
        ],
    );
    t.note(format!(
        "delta_c [Hz] = {}",
        format_float(config.delta_c_hz)
    ));
    let mut failures = Vec::new();
    let mut best: [Option<(f64, f64)>; 2] = [None, None];
    for (k, (e, res)) in axis.iter().zip(results).enumerate() {
        match res {
            Ok((c, s)) => {
                for (slot, value) in best.iter_mut().zip([c.delta_e, s.delta_e]) {
                    if value.is_finite() && slot.is_none_or(|(_, b)| value < b) {
                        *slot = Some((*e, value));
                    }
                }
                t.push(vec![
                    (*e).into(),
                    c.epsilon.into(),
                    c.deps_de.into(),
                    c.delta_e.into(),
                    s.delta_e.into(),
                    s.g_q.into(),
                ]);
            }
            Err(err) => {
                let mut cells = vec![(*e).into()];
                cells.extend(std::iter::repeat_n(Cell::Empty, 5));
                t.push(cells);
                failures.push(vec![
                    Cell::Int(k),
                    config.delta_c_hz.into(),
                    (*e).into(),
                    Cell::Text(err.to_string()),
                ]);
            }
        }
    }
    for (name, b) in ["coherent", "squeezed"].iter().zip(best) {
        if let Some((e, d)) = b {
            t.note(format!(
                "grid minimum {name}: e_mw [V/m] = {}, delta_e [V/m] = {}",
                format_float(e),
                format_float(d)
            ));
        }
    }
    Ok(RunOutput {
        table: t,
        errors: collect_failures(title, failures),
    })
}

fn point_susceptibility(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let r = response(config, config.delta_c_hz)?;
    let mut t = Table::new(
        title,
        &[
            "delta_c [Hz]",
            "e_mw [V/m]",
            "chi_re [1]",
            "chi_im [1]",
            "epsilon [1]",
            "phi [rad]",
            "transmission [1]",
        ],
    );
    t.note(format!("doppler averaged = {}", config.hot));
    t.push(vec![
        config.delta_c_hz.into(),
        config.e_mw_v_per_m.into(),
        r.chi.re.into(),
        r.chi.im.into(),
        r.epsilon.into(),
        r.phi.into(),
        r.transmission().into(),
    ]);
    Ok(RunOutput::complete(t))
}

fn point_steady_state(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let ss = steady_state(&config.atom(), &config.drive())?;
    let mut t = Table::new(title, &["element", "re [1]", "im [1]"]);
    t.note(format!(
        "condition number = {}",
        format_float(ss.condition_number)
    ));
    for w in &ss.warnings {
        t.note(format!("warning: {w}"));
    }
    let m = ss.to_matrix();
    for (mu, row) in m.iter().enumerate() {
        for (nu, value) in row.iter().enumerate() {
            t.push(vec![
                Cell::Text(format!("sigma{}{}", mu + 1, nu + 1)),
                value.re.into(),
                value.im.into(),
            ]);
        }
    }
    Ok(RunOutput::complete(t))
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn verify(config: &RunConfig, title: &str) -> Result<RunOutput> {
    let atom = config.atom();
    let drive = config.drive();
    let mut checks = Vec::new();
    let mut push = |name, value: f64, tolerance| {
        checks.push(Check {
            name,
            value,
            tolerance,
        })
    };

    let ss = steady_state(&atom, &drive)?;
    let rho = liouvillian_steady_state(&atom, &drive)?;
    push(
        "liouvillian_gap",
        steady_state_gap(&ss, &rho),
        LIOUVILLIAN_TOL,
    );
    push("trace_closure", (ss.trace() - 1.0).abs(), TRACE_TOL);
    push("hermiticity", ss.hermiticity_error(), HERMITICITY_TOL);

    let sol = first_order_coherences(&atom, &drive, &ss, 0.0)?;
    let expected = -Complex64::i() * resonance_fraction(&atom, &drive)?;
    push(
        "coherence_fraction",
        (sol.sigma12 - expected).norm() / expected.norm(),
        FRACTION_TOL,
    );

    let vac = vacuum_correlator_check(&atom, &drive)?;
    push("vacuum_deviation", vac.deviation, VACUUM_DEVIATION_TOL);
    push(
        "vacuum_full_model",
        vac.full_model_residual,
        VACUUM_RESIDUAL_TOL,
    );

    let ens = match ensemble(config) {
        Some(e) => e,
        None => ThermalEnsemble::new(config.temperature_k, config.mass_kg)?,
    };
    let mesh = VelocityMesh::new(&atom, &drive, &ens)?;
    let total: f64 = mesh.weights().iter().sum();
    push(
        "velocity_normalization",
        (total - 1.0).abs(),
        NORMALIZATION_TOL,
    );

    if config.e_mw_v_per_m > 0.0 {
        match convergence_check(
            &atom,
            &drive,
            config.e_mw_v_per_m,
            ensemble(config).as_ref(),
        )? {
            Convergence::Resolved { report, .. } => push(
                "richardson_order",
                (report.observed_order - 2.0).abs(),
                ORDER_TOL,
            ),
            Convergence::NoiseLimited(report) => push(
                "richardson_truncation_over_noise",
                (report.d_h2 - report.d_h4).abs() / report.rounding,
                RESOLUTION_FACTOR,
            ),
        }
    }

    let mut t = Table::new(title, &["check", "value [1]", "tolerance [1]", "passed"]);
    for w in atom.warnings() {
        t.note(format!("warning: {w}"));
    }
    let mut failures = Vec::new();
    for (k, c) in checks.iter().enumerate() {
        let passed = c.value <= c.tolerance;
        t.push(vec![
            Cell::Text(c.name.into()),
            c.value.into(),
            c.tolerance.into(),
            Cell::Text(passed.to_string()),
        ]);
        if !passed {
            failures.push(vec![
                Cell::Int(k),
                config.delta_c_hz.into(),
                config.e_mw_v_per_m.into(),
                Cell::Text(format!("{} = {} exceeds {}", c.name, c.value, c.tolerance)),
            ]);
        }
    }
    Ok(RunOutput {
        table: t,
        errors: collect_failures(title, failures),
    })
}

/// `out.csv` -> `out.errors.csv`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.errors.csv"))
}

/// Runs a subcommand and writes its CSV to `out` (or standard output), with
/// failures in a sidecar next to it. Failed cells give a numerical error
/// after both files are written.
pub fn execute(
    sub: Subcommand,
    config: &RunConfig,
    out: Option<&Path>,
) -> std::result::Result<(), CliError> {
    let output = run(sub, config).map_err(CliError::Numerical)?;
    let text = output.table.render(Some(config));
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        })
    };
    let sidecar = match out {
        Some(path) => {
            write(path, &text)?;
            sidecar_path(path)
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                Err(source) => {
                    return Err(CliError::Output {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
                }
            }
            PathBuf::from(format!("{}.errors.csv", sub.name()))
        }
    };
    match &output.errors {
        Some(errors) => {
            write(&sidecar, &errors.render(Some(config)))?;
            Err(CliError::Numerical(Error::Numerical(format!(
                "{} failed cells, listed in {}",
                errors.rows.len(),
                sidecar.display()
            ))))
        }
        None => {
            if sidecar.exists() && out.is_some() {
                let _ = std::fs::remove_file(&sidecar);
            }
            Ok(())
        }
    }
}
