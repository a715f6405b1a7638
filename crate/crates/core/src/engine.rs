//! Microwave-field sensitivity: medium response chained into a readout noise
//! budget, plus sweeps and optimum search over the dressing amplitude and the
//! coupling detuning.

use rayon::prelude::*;

use crate::detection::{
    balanced_classical_budget, classical_budget, quantum_enhancement, squeezed_budget,
    CoherentScheme, NoiseBudget, SqueezedScheme,
};
use crate::doppler::{averaged_on_mesh, ThermalEnsemble, VelocityMesh};
use crate::error::{domain, Error, Result};
use crate::medium::{rabi_from_field, susceptibility, Drive, LadderAtom, MediumResponse};
use crate::numeric::golden_section;

pub const DEFAULT_REL_STEP: f64 = 1e-4;
pub const DEFAULT_REFINE_TOL: f64 = 1e-3;
/// Environment variable capping sweep parallelism; 0 or unset means one
/// thread per core.
pub const THREADS_ENV: &str = "RYDSENSE_THREADS";

/// Optical readout of the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    /// Differential detection with the splitter rebalanced at every point.
    Coherent { alpha: f64 },
    /// Coherent light through a fixed splitter (for example direct detection).
    CoherentFixed(CoherentScheme),
    /// Squeezed vacuum in the reference port, splitter rebalanced at every point.
    Squeezed { alpha: f64, r: f64 },
}

impl Readout {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Readout::Coherent { alpha } => CoherentScheme::balanced(alpha, 0.0).map(|_| ()),
            Readout::CoherentFixed(s) => {
                CoherentScheme::new(s.alpha(), s.transmissivity()).map(|_| ())
            }
            Readout::Squeezed { alpha, r } => SqueezedScheme::balanced(alpha, r, 0.0).map(|_| ()),
        }
    }

    pub fn budget(&self, epsilon: f64) -> Result<NoiseBudget> {
        match *self {
            Readout::Coherent { alpha } => balanced_classical_budget(alpha, epsilon),
            Readout::CoherentFixed(scheme) => classical_budget(&scheme, epsilon),
            Readout::Squeezed { alpha, r } => {
                squeezed_budget(&SqueezedScheme::balanced(alpha, r, epsilon)?, epsilon)
            }
        }
    }

    /// The coherent balanced readout with the same local-oscillator amplitude.
    pub fn classical_counterpart(&self) -> Readout {
        match *self {
            Readout::Squeezed { alpha, .. } => Readout::Coherent { alpha },
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Readout::Coherent { .. } => "coherent",
            Readout::CoherentFixed(_) => "coherent-fixed",
            Readout::Squeezed { .. } => "squeezed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    /// Relative finite-difference step for `d epsilon / d E`.
    pub rel_step: f64,
    /// Relative bracket width at which the optimum refinement stops.
    pub refine_tol: f64,
    /// Worker threads for sweeps; 0 uses the environment or all cores.
    pub threads: usize,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            rel_step: DEFAULT_REL_STEP,
            refine_tol: DEFAULT_REFINE_TOL,
            threads: 0,
        }
    }
}

impl EngineSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_step > 0.0 && self.rel_step <= 1e-2) {
            return Err(domain(
                "rel_step",
                format!("must lie in (0, 1e-2], got {}", self.rel_step),
            ));
        }
        if !(self.refine_tol > 0.0 && self.refine_tol < 1.0) {
            return Err(domain(
                "refine_tol",
                format!("must lie in (0, 1), got {}", self.refine_tol),
            ));
        }
        Ok(())
    }
}

/// A sensing configuration. `drive.omega_mw` is ignored and rebuilt from
/// `e_mw` through the Rydberg dipole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub drive: Drive,
    /// Dressing amplitude (V/m).
    pub e_mw: f64,
    pub readout: Readout,
    /// Doppler averaging is applied when present.
    pub ensemble: Option<ThermalEnsemble>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityResult {
    pub delta_c: f64,
    pub e_mw: f64,
    /// Smallest detectable field increment (V/m).
    pub delta_e: f64,
    /// `ln(delta_e)`, finite where `delta_e` overflows in an opaque medium.
    pub ln_delta_e: f64,
    pub epsilon: f64,
    pub slope_eps: f64,
    /// `d epsilon / d E_MW` (m/V).
    pub deps_de: f64,
    pub variance: f64,
    /// Classical-to-squeezed ratio at this point, for squeezed readout.
    pub g_q: Option<f64>,
}

impl SensitivityResult {
    /// `sqrt(variance) / (|slope| |d epsilon / d E|)` from the stored parts.
    pub fn recomputed_delta_e(&self) -> f64 {
        field_resolution(self.variance, self.slope_eps, self.deps_de)
    }
}

/// Infinite when the stored parts carry no first-order response, including
/// an opaque medium whose transmitted intensity underflows.
fn field_resolution(variance: f64, slope: f64, deps: f64) -> f64 {
    let gain = slope.abs() * deps.abs();
    if gain > 0.0 {
        variance.sqrt() / gain
    } else {
        f64::INFINITY
    }
}

fn dressed(atom: &LadderAtom, drive: &Drive, e_mw: f64) -> Drive {
    drive.with_mw(rabi_from_field(atom.mu43, e_mw))
}

/// Cold or Doppler-averaged response at the given dressing amplitude.
pub fn medium_response(
    atom: &LadderAtom,
    drive: &Drive,
    e_mw: f64,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<MediumResponse> {
    let d = dressed(atom, drive, e_mw);
    match ensemble {
        None => susceptibility(atom, &d),
        Some(ens) => averaged_on_mesh(atom, &d, ens.geometry, &VelocityMesh::new(atom, &d, ens)?),
    }
}

/// Evaluates `epsilon(E)` on a finite-difference stencil. Hot media share one
/// velocity mesh refined around the poles of every stencil field, so
/// differences carry neither mesh noise nor unresolved moving poles.
struct EpsilonProbe<'a> {
    atom: &'a LadderAtom,
    drive: Drive,
    mesh: Option<(VelocityMesh, &'a ThermalEnsemble)>,
}

fn fd_step(atom: &LadderAtom, e_mw: f64, rel_step: f64) -> f64 {
    let floor = 1e-6 * crate::constants::HBAR * atom.gamma2 / atom.mu43;
    (rel_step * e_mw).max(floor)
}

/// Fields touched by the derivative stencil at `e_mw`.
fn derivative_stencil(e_mw: f64, h: f64) -> Vec<f64> {
    if e_mw == 0.0 {
        vec![0.0, h, 2.0 * h]
    } else {
        vec![e_mw - h, e_mw, e_mw + h]
    }
}

impl<'a> EpsilonProbe<'a> {
    fn new(
        atom: &'a LadderAtom,
        drive: &Drive,
        fields: &[f64],
        ensemble: Option<&'a ThermalEnsemble>,
    ) -> Result<Self> {
        let mesh = match ensemble {
            None => None,
            Some(ens) => {
                let drives: Vec<Drive> = fields.iter().map(|&e| dressed(atom, drive, e)).collect();
                Some((VelocityMesh::covering(atom, &drives, ens)?, ens))
            }
        };
        Ok(Self {
            atom,
            drive: *drive,
            mesh,
        })
    }

    fn response(&self, e_mw: f64) -> Result<MediumResponse> {
        let d = dressed(self.atom, &self.drive, e_mw);
        match &self.mesh {
            None => susceptibility(self.atom, &d),
            Some((mesh, ens)) => averaged_on_mesh(self.atom, &d, ens.geometry, mesh),
        }
    }

    fn epsilon(&self, e_mw: f64) -> Result<f64> {
        self.response(e_mw).map(|r| r.epsilon)
    }

    fn central(&self, e_mw: f64, h: f64) -> Result<f64> {
        let plus = self.epsilon(e_mw + h)?;
        let minus = self.epsilon(e_mw - h)?;
        if plus == minus {
            return Err(Error::StepUnderflow {
                field: e_mw,
                step: h,
            });
        }
        Ok((plus - minus) / (2.0 * h))
    }

    fn derivative(&self, e_mw: f64, rel_step: f64) -> Result<f64> {
        let h = fd_step(self.atom, e_mw, rel_step);
        if e_mw == 0.0 {
            // Second-order forward stencil. epsilon is even in E, so a
            // vanishing difference here is the exact answer, not an underflow.
            let diff = 4.0 * self.epsilon(h)? - self.epsilon(2.0 * h)? - 3.0 * self.epsilon(0.0)?;
            return Ok(diff / (2.0 * h));
        }
        self.central(e_mw, h)
    }
}

/// `d epsilon / d E_MW` by central differences (second-order forward at
/// `E = 0`). The
/// step is `rel_step * E` with an absolute floor of
/// `1e-6 hbar gamma2 / mu43`.
pub fn deps_de(
    atom: &LadderAtom,
    drive: &Drive,
    e_mw: f64,
    rel_step: f64,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<f64> {
    check_field(e_mw)?;
    if !(rel_step > 0.0 && rel_step <= 1e-2) {
        return Err(domain(
            "rel_step",
            format!("must lie in (0, 1e-2], got {rel_step}"),
        ));
    }
    let stencil = derivative_stencil(e_mw, fd_step(atom, e_mw, rel_step));
    EpsilonProbe::new(atom, drive, &stencil, ensemble)?.derivative(e_mw, rel_step)
}

/// Central differences at `h`, `h/2` and `h/4`; for a smooth `epsilon(E)` the
/// successive differences shrink fourfold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonReport {
    pub step: f64,
    pub d_h: f64,
    pub d_h2: f64,
    pub d_h4: f64,
    /// `log2(|D(h) - D(h/2)| / |D(h/2) - D(h/4)|)`.
    pub observed_order: f64,
    /// Richardson-extrapolated derivative `(4 D(h/2) - D(h)) / 3`.
    pub extrapolated: f64,
    /// Noise scale of `D(h/4)`, from fourth differences of `epsilon` on the
    /// spacing `h/8` and never below unit roundoff.
    pub rounding: f64,
}

impl RichardsonReport {
    /// Whether the truncation error at `h/4` stands `factor` times above
    /// rounding, so that `observed_order` measures the stencil and not noise.
    pub fn resolved(&self, factor: f64) -> bool {
        (self.d_h2 - self.d_h4).abs() > factor * self.rounding
    }
}

pub fn richardson_check(
    atom: &LadderAtom,
    drive: &Drive,
    e_mw: f64,
    rel_step: f64,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<RichardsonReport> {
    check_field(e_mw)?;
    if e_mw == 0.0 {
        return Err(domain(
            "e_mw",
            "the convergence check needs a central difference (E > 0)",
        ));
    }
    let h = fd_step(atom, e_mw, rel_step);
    // The h/8 lattice up to h/2 carries the noise estimate; h joins for D(h).
    let mut fields: Vec<f64> = (-4..=4).map(|j| e_mw + j as f64 * h / 8.0).collect();
    fields.extend([e_mw - h, e_mw + h]);
    let probe = EpsilonProbe::new(atom, drive, &fields, ensemble)?;
    let d_h = probe.central(e_mw, h)?;
    let d_h2 = probe.central(e_mw, h / 2.0)?;
    let d_h4 = probe.central(e_mw, h / 4.0)?;
    let lattice: Vec<f64> = fields[..9]
        .iter()
        .map(|&e| probe.epsilon(e))
        .collect::<Result<_>>()?;
    // A fourth difference of independent noise has variance 70 sigma^2.
    let mean_square = lattice
        .windows(5)
        .map(|w| (w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4]).powi(2))
        .sum::<f64>()
        / 5.0;
    let sigma = (mean_square / 70.0)
        .sqrt()
        .max(f64::EPSILON * lattice[4].abs());
    let rounding = sigma / (h / 4.0);
    Ok(RichardsonReport {
        step: h,
        d_h,
        d_h2,
        d_h4,
        observed_order: ((d_h - d_h2).abs() / (d_h2 - d_h4).abs()).log2(),
        extrapolated: (4.0 * d_h2 - d_h) / 3.0,
        rounding,
    })
}

/// Relative steps tried, in order, by [`convergence_check`].
pub const CONVERGENCE_STEPS: [f64; 4] = [1e-2, 3e-2, 1e-1, 3e-1];
/// Truncation-to-noise ratio above which the observed order is trusted.
pub const RESOLUTION_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    /// Truncation error resolved above noise; `observed_order` is meaningful.
    Resolved {
        rel_step: f64,
        report: RichardsonReport,
    },
    /// Truncation stays within `RESOLUTION_FACTOR` noise levels at every step
    /// tried, so the derivative is already accurate to its noise floor.
    NoiseLimited(RichardsonReport),
}

/// Richardson check at the smallest step of [`CONVERGENCE_STEPS`] whose
/// truncation error stands clear of the noise in `epsilon(E)`.
pub fn convergence_check(
    atom: &LadderAtom,
    drive: &Drive,
    e_mw: f64,
    ensemble: Option<&ThermalEnsemble>,
) -> Result<Convergence> {
    let mut last = None;
    for rel_step in CONVERGENCE_STEPS {
        let report = match richardson_check(atom, drive, e_mw, rel_step, ensemble) {
            Ok(r) => r,
            // Identical stencil values: nothing resolved at this step.
            Err(Error::StepUnderflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if report.resolved(RESOLUTION_FACTOR) {
            return Ok(Convergence::Resolved { rel_step, report });
        }
        last = Some(report);
    }
    last.map(Convergence::NoiseLimited)
        .ok_or(Error::StepUnderflow {
            field: e_mw,
            step: CONVERGENCE_STEPS[CONVERGENCE_STEPS.len() - 1] * e_mw,
        })
}

fn check_field(e_mw: f64) -> Result<()> {
    if !(e_mw >= 0.0 && e_mw.is_finite()) {
        return Err(domain(
            "e_mw",
            format!("must be finite and >= 0, got {e_mw}"),
        ));
    }
    Ok(())
}

/// Sensitivity at one operating point.
pub fn evaluate(
    atom: &LadderAtom,
    point: &OperatingPoint,
    settings: &EngineSettings,
) -> Result<SensitivityResult> {
    atom.validate()?;
    point.drive.validate()?;
    point.readout.validate()?;
    settings.validate()?;
    check_field(point.e_mw)?;
    let stencil = derivative_stencil(point.e_mw, fd_step(atom, point.e_mw, settings.rel_step));
    let probe = EpsilonProbe::new(atom, &point.drive, &stencil, point.ensemble.as_ref())?;
    let epsilon = probe.epsilon(point.e_mw)?;
    if epsilon < 0.0 {
        return Err(Error::Numerical(format!(
            "negative absorption index {epsilon:e} at Delta_c = {:e} rad/s, E = {:e} V/m",
            point.drive.delta_c, point.e_mw
        )));
    }
    let budget = point.readout.budget(epsilon)?;
    let deps = probe.derivative(point.e_mw, settings.rel_step)?;
    let ln_delta_e = budget.ln_sensitivity_epsilon - deps.abs().ln();
    let delta_e = ln_delta_e.exp();
    let g_q = match point.readout {
        Readout::Squeezed { r, .. } => Some(quantum_enhancement(r, epsilon)),
        _ => None,
    };
    Ok(SensitivityResult {
        delta_c: point.drive.delta_c,
        e_mw: point.e_mw,
        delta_e,
        ln_delta_e,
        epsilon,
        slope_eps: budget.slope_wrt_epsilon,
        deps_de: deps,
        variance: budget.variance,
        g_q,
    })
}

/// Runs `f` on a pool sized by `settings.threads`, the thread environment
/// variable, or the core count, in that order.
pub fn with_pool<T: Send>(settings: &EngineSettings, f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = if settings.threads > 0 {
        settings.threads
    } else {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn check_axis(name: &'static str, axis: &[f64], nonnegative: bool) -> Result<()> {
    if axis.is_empty() {
        return Err(domain(name, "axis is empty"));
    }
    if axis
        .iter()
        .any(|x| !x.is_finite() || (nonnegative && *x < 0.0))
    {
        return Err(domain(
            name,
            "axis values must be finite (and >= 0 for fields)",
        ));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(name, "axis must be strictly increasing"));
    }
    Ok(())
}

/// Sensitivity along the dressing amplitude at the drive's detunings
/// (line centre for a resonant drive). Output order follows the axis.
pub fn line_scan(
    atom: &LadderAtom,
    drive: &Drive,
    readout: Readout,
    e_mw_axis: &[f64],
    ensemble: Option<&ThermalEnsemble>,
    settings: &EngineSettings,
) -> Result<Vec<SensitivityResult>> {
    check_axis("e_mw_axis", e_mw_axis, true)?;
    let points: Vec<OperatingPoint> = e_mw_axis
        .iter()
        .map(|&e_mw| OperatingPoint {
            drive: *drive,
            e_mw,
            readout,
            ensemble: ensemble.copied(),
        })
        .collect();
    with_pool(settings, || {
        points
            .par_iter()
            .map(|p| evaluate(atom, p, settings))
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    /// Index along the detuning axis.
    pub i: usize,
    /// Index along the field axis.
    pub j: usize,
    pub delta_c: f64,
    pub e_mw: f64,
    pub error: Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptimum {
    pub index: (usize, usize),
    /// Best grid cell.
    pub grid: SensitivityResult,
    /// After one golden-section pass along each axis; never worse than `grid`.
    pub refined: SensitivityResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap {
    pub delta_c_axis: Vec<f64>,
    pub e_mw_axis: Vec<f64>,
    /// `values[i][j]` at `delta_c_axis[i]`, `e_mw_axis[j]`; `None` for failed cells.
    pub values: Vec<Vec<Option<SensitivityResult>>>,
    pub failures: Vec<CellFailure>,
    pub optimum: Option<MapOptimum>,
}

/// Full grid over coupling detuning and dressing amplitude, then a grid
/// argmin refined by golden-section search along each axis once.
pub fn sensitivity_map(
    atom: &LadderAtom,
    drive: &Drive,
    readout: Readout,
    delta_c_axis: &[f64],
    e_mw_axis: &[f64],
    ensemble: Option<&ThermalEnsemble>,
    settings: &EngineSettings,
) -> Result<SensitivityMap> {
    check_axis("delta_c_axis", delta_c_axis, false)?;
    check_axis("e_mw_axis", e_mw_axis, true)?;
    atom.validate()?;
    readout.validate()?;
    settings.validate()?;
    let cells: Vec<(usize, usize)> = (0..delta_c_axis.len())
        .flat_map(|i| (0..e_mw_axis.len()).map(move |j| (i, j)))
        .collect();
    let point = |delta_c: f64, e_mw: f64| OperatingPoint {
        drive: drive.with_coupling_detuning(delta_c),
        e_mw,
        readout,
        ensemble: ensemble.copied(),
    };
    let results = with_pool(settings, || {
        cells
            .par_iter()
            .map(|&(i, j)| evaluate(atom, &point(delta_c_axis[i], e_mw_axis[j]), settings))
            .collect::<Vec<_>>()
    })?;

    let mut values = vec![vec![None; e_mw_axis.len()]; delta_c_axis.len()];
    let mut failures = Vec::new();
    let mut best: Option<((usize, usize), SensitivityResult)> = None;
    for (&(i, j), res) in cells.iter().zip(results) {
        match res {
            Ok(r) => {
                if r.delta_e.is_finite() && best.as_ref().is_none_or(|(_, b)| r.delta_e < b.delta_e)
                {
                    best = Some(((i, j), r));
                }
                values[i][j] = Some(r);
            }
            Err(error) => failures.push(CellFailure {
                i,
                j,
                delta_c: delta_c_axis[i],
                e_mw: e_mw_axis[j],
                error,
            }),
        }
    }

    let optimum = best.map(|(index, grid)| {
        let refined = refine(atom, &point, delta_c_axis, e_mw_axis, index, grid, settings);
        MapOptimum {
            index,
            grid,
            refined,
        }
    });
    Ok(SensitivityMap {
        delta_c_axis: delta_c_axis.to_vec(),
        e_mw_axis: e_mw_axis.to_vec(),
        values,
        failures,
        optimum,
    })
}

fn neighbours(axis: &[f64], k: usize) -> (f64, f64) {
    let lo = axis[k.saturating_sub(1)];
    let hi = axis[(k + 1).min(axis.len() - 1)];
    (lo, hi)
}

fn refine(
    atom: &LadderAtom,
    point: &impl Fn(f64, f64) -> OperatingPoint,
    delta_c_axis: &[f64],
    e_mw_axis: &[f64],
    (i, j): (usize, usize),
    grid: SensitivityResult,
    settings: &EngineSettings,
) -> SensitivityResult {
    let cost = |delta_c: f64, e_mw: f64| {
        evaluate(atom, &point(delta_c, e_mw), settings)
            .ok()
            .filter(|r| r.delta_e.is_finite())
    };
    let mut best = grid;
    let (lo, hi) = neighbours(delta_c_axis, i);
    if hi > lo {
        let (x, _) = golden_section(
            |x| cost(x, best.e_mw).map_or(f64::INFINITY, |r| r.delta_e),
            lo,
            hi,
            settings.refine_tol,
        );
        if let Some(r) = cost(x, best.e_mw).filter(|r| r.delta_e < best.delta_e) {
            best = r;
        }
    }
    let (lo, hi) = neighbours(e_mw_axis, j);
    if hi > lo {
        let (x, _) = golden_section(
            |x| cost(best.delta_c, x).map_or(f64::INFINITY, |r| r.delta_e),
            lo,
            hi,
            settings.refine_tol,
        );
        if let Some(r) = cost(best.delta_c, x).filter(|r| r.delta_e < best.delta_e) {
            best = r;
        }
    }
    best
}

/// Local minima strictly inside a scan (first and last points excluded).
pub fn interior_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] < values[k - 1] && values[k] < values[k + 1])
        .collect()
}
