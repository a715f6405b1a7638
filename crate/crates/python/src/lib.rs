//! Python bindings: atoms, drives, medium response, readout enhancement,
//! line scans and the command-line subcommands.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rydsense::cli::{run, RunConfig, Subcommand};
use rydsense::detection;
use rydsense::doppler::{doppler_averaged_response, ThermalEnsemble};
use rydsense::engine::{self, EngineSettings, Readout, SensitivityResult};
use rydsense::medium::{self, LadderAtom, MediumResponse};
use rydsense::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain { .. } | Error::Contract(_) | Error::ZeroTransmissivity => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Four-level ladder constants in SI units; rates in rad/s.
#[pyclass(name = "Atom", module = "rydsense_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyAtom {
    inner: LadderAtom,
}

#[pymethods]
impl PyAtom {
    #[staticmethod]
    fn cold_default() -> Self {
        Self {
            inner: LadderAtom::cold_default(),
        }
    }

    #[staticmethod]
    fn hot_default() -> Self {
        Self {
            inner: LadderAtom::hot_default(),
        }
    }

    #[getter]
    fn gamma2(&self) -> f64 {
        self.inner.gamma2
    }

    #[getter]
    fn gamma3(&self) -> f64 {
        self.inner.gamma3
    }

    #[getter]
    fn gamma4(&self) -> f64 {
        self.inner.gamma4
    }

    #[getter]
    fn mu43(&self) -> f64 {
        self.inner.mu43
    }

    #[getter]
    fn density(&self) -> f64 {
        self.inner.density
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    /// Copy with the given fields replaced.
    #[pyo3(signature = (*, gamma2=None, gamma3=None, gamma4=None, density=None, length=None))]
    fn replace(
        &self,
        gamma2: Option<f64>,
        gamma3: Option<f64>,
        gamma4: Option<f64>,
        density: Option<f64>,
        length: Option<f64>,
    ) -> PyResult<Self> {
        let a = self.inner;
        let inner = LadderAtom {
            gamma2: gamma2.unwrap_or(a.gamma2),
            gamma3: gamma3.unwrap_or(a.gamma3),
            gamma4: gamma4.unwrap_or(a.gamma4),
            density: density.unwrap_or(a.density),
            length: length.unwrap_or(a.length),
            ..a
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Real Rabi frequencies and detunings, all in rad/s.
#[pyclass(name = "Drive", module = "rydsense_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDrive {
    inner: medium::Drive,
}

#[pymethods]
impl PyDrive {
    #[new]
    #[pyo3(signature = (omega_c, omega_mw=0.0, delta_p=0.0, delta_c=0.0, delta_mw=0.0))]
    fn new(
        omega_c: f64,
        omega_mw: f64,
        delta_p: f64,
        delta_c: f64,
        delta_mw: f64,
    ) -> PyResult<Self> {
        let inner = medium::Drive {
            delta_p,
            delta_c,
            delta_mw,
            ..medium::Drive::resonant(omega_c, omega_mw)
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c.re
    }

    #[getter]
    fn omega_mw(&self) -> f64 {
        self.inner.omega_mw.re
    }

    #[getter]
    fn delta_c(&self) -> f64 {
        self.inner.delta_c
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn response_dict<'py>(py: Python<'py>, r: &MediumResponse) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("chi_re", r.chi.re)?;
    d.set_item("chi_im", r.chi.im)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("phi", r.phi)?;
    d.set_item("transmission", r.transmission())?;
    Ok(d)
}

/// Stationary susceptibility of atoms at rest.
#[pyfunction]
fn susceptibility<'py>(
    py: Python<'py>,
    atom: &PyAtom,
    drive: &PyDrive,
) -> PyResult<Bound<'py, PyDict>> {
    let r = medium::susceptibility(&atom.inner, &drive.inner).map_err(to_py)?;
    response_dict(py, &r)
}

/// Susceptibility averaged over a one-dimensional Maxwell-Boltzmann
/// distribution with counter-propagating beams.
#[pyfunction]
#[pyo3(signature = (atom, drive, temperature_k=295.0))]
fn doppler_averaged<'py>(
    py: Python<'py>,
    atom: &PyAtom,
    drive: &PyDrive,
    temperature_k: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let ens = ThermalEnsemble::new(temperature_k, atom.inner.mass).map_err(to_py)?;
    let r = doppler_averaged_response(&atom.inner, &drive.inner, &ens).map_err(to_py)?;
    response_dict(py, &r)
}

/// Probe-free populations and the trace of the zeroth-order solution.
#[pyfunction]
fn steady_state<'py>(
    py: Python<'py>,
    atom: &PyAtom,
    drive: &PyDrive,
) -> PyResult<Bound<'py, PyDict>> {
    let ss = medium::steady_state(&atom.inner, &drive.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item(
        "populations",
        vec![ss.sigma11, ss.sigma22, ss.sigma33, ss.sigma44],
    )?;
    d.set_item("trace", ss.trace())?;
    d.set_item("condition_number", ss.condition_number)?;
    Ok(d)
}

#[pyfunction]
fn quantum_enhancement(r: f64, epsilon: f64) -> f64 {
    detection::quantum_enhancement(r, epsilon)
}

/// Infinite-squeezing bound, `None` without absorption.
#[pyfunction]
fn enhancement_limit(epsilon: f64) -> Option<f64> {
    detection::enhancement_limit(epsilon)
}

fn readout(scheme: &str, alpha: f64, r: f64) -> PyResult<Readout> {
    match scheme {
        "coherent" => Ok(Readout::Coherent { alpha }),
        "squeezed" => Ok(Readout::Squeezed { alpha, r }),
        other => Err(PyValueError::new_err(format!(
            "scheme must be coherent or squeezed, got {other}"
        ))),
    }
}

fn result_dict<'py>(py: Python<'py>, s: &SensitivityResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("e_mw", s.e_mw)?;
    d.set_item("delta_e", s.delta_e)?;
    d.set_item("ln_delta_e", s.ln_delta_e)?;
    d.set_item("epsilon", s.epsilon)?;
    d.set_item("deps_de", s.deps_de)?;
    d.set_item("g_q", s.g_q)?;
    Ok(d)
}

/// Sensitivity along the dressing amplitude (V/m) at the drive's detunings.
#[pyfunction]
#[pyo3(signature = (atom, drive, e_mw, scheme="squeezed", alpha=1e7, r=2.5, temperature_k=None))]
#[allow(clippy::too_many_arguments)]
fn line_scan<'py>(
    py: Python<'py>,
    atom: &PyAtom,
    drive: &PyDrive,
    e_mw: Vec<f64>,
    scheme: &str,
    alpha: f64,
    r: f64,
    temperature_k: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ens = temperature_k
        .map(|t| ThermalEnsemble::new(t, atom.inner.mass))
        .transpose()
        .map_err(to_py)?;
    let ro = readout(scheme, alpha, r)?;
    let (a, d) = (atom.inner, drive.inner);
    let results = py
        .detach(|| engine::line_scan(&a, &d, ro, &e_mw, ens.as_ref(), &EngineSettings::default()))
        .map_err(to_py)?;
    results.iter().map(|s| result_dict(py, s)).collect()
}

/// Runs a subcommand on configuration text and returns its CSV.
#[pyfunction]
fn run_command(py: Python<'_>, subcommand: &str, config: &str) -> PyResult<String> {
    let sub = Subcommand::from_name(subcommand)
        .ok_or_else(|| PyValueError::new_err(format!("unknown subcommand {subcommand}")))?;
    let config = RunConfig::parse(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = py.detach(|| run(sub, &config)).map_err(to_py)?;
    if let Some(errors) = &out.errors {
        return Err(PyRuntimeError::new_err(errors.render(None)));
    }
    Ok(out.table.render(Some(&config)))
}

#[pymodule]
fn rydsense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyAtom>()?;
    m.add_class::<PyDrive>()?;
    m.add_function(wrap_pyfunction!(susceptibility, m)?)?;
    m.add_function(wrap_pyfunction!(doppler_averaged, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_enhancement, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement_limit, m)?)?;
    m.add_function(wrap_pyfunction!(line_scan, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
