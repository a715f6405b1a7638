//! Flat `key = value` run configuration.
//!
//! Frequencies are cyclic (Hz) and converted to angular units when the
//! physical types are built; everything else is SI.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::constants::TWO_PI;
use crate::doppler::{BeamGeometry, ThermalEnsemble};
use crate::doppler::{DEFAULT_CUTOFF_WIDTHS, DEFAULT_PANEL_INTERVALS, DEFAULT_POINTS};
use crate::engine::{EngineSettings, Readout, DEFAULT_REFINE_TOL, DEFAULT_REL_STEP};
use crate::medium::{rabi_from_field, Drive, LadderAtom, RB87_MASS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key `{key}` on lines {first} and {second}")]
    Duplicate {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("`{key}` = {value}: must be {range}")]
    OutOfRange {
        key: String,
        value: String,
        range: String,
    },
    #[error("`{key}`: {message}")]
    Inconsistent { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    ColdDefault,
    HotDefault,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::ColdDefault, Preset::HotDefault];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ColdDefault => "cold_default",
            Preset::HotDefault => "hot_default",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// Sweep axis; `count == 1` collapses to the single value `min == max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl AxisSpec {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            scale: Scale::Linear,
        }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            scale: Scale::Log,
        }
    }

    /// Grid values with both ends exact. Linear grids are symmetric about
    /// their midpoint to the last bit.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        if n == 1 {
            return vec![self.min];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k == n - 1 {
                    return self.max;
                }
                let u = (2.0 * k as f64 - last) / last;
                match self.scale {
                    Scale::Linear => 0.5 * (self.min + self.max) + 0.5 * (self.max - self.min) * u,
                    Scale::Log => {
                        let (a, b) = (self.min.log10(), self.max.log10());
                        10f64.powf(0.5 * (a + b) + 0.5 * (b - a) * u)
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Coherent,
    Squeezed,
}

/// Every effective parameter of a run, in the units of its key.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub gamma2_hz: f64,
    pub gamma3_hz: f64,
    pub gamma4_hz: f64,
    pub mu21_cm: f64,
    pub mu32_cm: f64,
    pub mu43_cm: f64,
    pub density_m3: f64,
    pub length_m: f64,
    pub probe_wavelength_m: f64,
    pub coupling_wavelength_m: f64,
    pub mass_kg: f64,
    pub omega_c_hz: f64,
    pub delta_p_hz: f64,
    pub delta_c_hz: f64,
    pub delta_mw_hz: f64,
    pub e_mw_v_per_m: f64,
    pub scheme: SchemeKind,
    pub alpha: f64,
    pub r: f64,
    pub hot: bool,
    pub temperature_k: f64,
    pub cutoff_widths: f64,
    pub geometry: BeamGeometry,
    pub pole_refinement: bool,
    pub quadrature_points: usize,
    pub panel_intervals: usize,
    pub fd_rel_step: f64,
    pub refine_tol: f64,
    pub sweep_delta_c_hz: AxisSpec,
    pub sweep_e_mw: AxisSpec,
    pub sweep_r: AxisSpec,
    pub sweep_epsilon: AxisSpec,
    /// Not echoed: it names where results go, not what they are.
    pub output: Option<PathBuf>,
}

const AXES: [&str; 4] = ["delta_c_hz", "e_mw_v_per_m", "r", "epsilon"];
const AXIS_FIELDS: [&str; 4] = ["min", "max", "count", "scale"];

const SCALAR_KEYS: [&str; 29] = [
    "preset",
    "atom.gamma2_hz",
    "atom.gamma3_hz",
    "atom.gamma4_hz",
    "atom.mu21_cm",
    "atom.mu32_cm",
    "atom.mu43_cm",
    "atom.density_m3",
    "atom.length_m",
    "atom.probe_wavelength_m",
    "atom.coupling_wavelength_m",
    "atom.mass_kg",
    "drive.omega_c_hz",
    "drive.delta_p_hz",
    "drive.delta_c_hz",
    "drive.delta_mw_hz",
    "drive.e_mw_v_per_m",
    "scheme.kind",
    "scheme.alpha",
    "scheme.r",
    "ensemble.hot",
    "ensemble.temperature_k",
    "ensemble.cutoff_widths",
    "ensemble.geometry",
    "ensemble.pole_refinement",
    "numeric.quadrature_points",
    "numeric.panel_intervals",
    "numeric.fd_rel_step",
    "numeric.refine_tol",
];

/// All keys in echo order; `output` is accepted but never echoed.
pub fn keys() -> Vec<String> {
    let mut out: Vec<String> = SCALAR_KEYS.iter().map(|k| k.to_string()).collect();
    for axis in AXES {
        for field in AXIS_FIELDS {
            out.push(format!("sweep.{axis}.{field}"));
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Rule {
    Positive,
    NonNegative,
    Finite,
    AtLeast(f64),
    Closed(f64, f64),
    /// Open at the lower end, closed at the upper.
    HalfOpen(f64, f64),
    Open(f64, f64),
    Odd3,
    Even2,
    AtLeastOne,
}

impl Rule {
    fn describe(self) -> String {
        match self {
            Rule::Positive => "finite and > 0".into(),
            Rule::NonNegative => "finite and >= 0".into(),
            Rule::Finite => "finite".into(),
            Rule::AtLeast(lo) => format!("finite and >= {}", format_float(lo)),
            Rule::Closed(lo, hi) => format!("in [{}, {}]", format_float(lo), format_float(hi)),
            Rule::HalfOpen(lo, hi) => format!("in ({}, {}]", format_float(lo), format_float(hi)),
            Rule::Open(lo, hi) => format!("in ({}, {})", format_float(lo), format_float(hi)),
            Rule::Odd3 => "an odd integer >= 3".into(),
            Rule::Even2 => "an even integer >= 2".into(),
            Rule::AtLeastOne => "an integer >= 1".into(),
        }
    }

    fn admits(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                Rule::Positive => x > 0.0,
                Rule::NonNegative => x >= 0.0,
                Rule::Finite => true,
                Rule::AtLeast(lo) => x >= lo,
                Rule::Closed(lo, hi) => x >= lo && x <= hi,
                Rule::HalfOpen(lo, hi) => x > lo && x <= hi,
                Rule::Open(lo, hi) => x > lo && x < hi,
                Rule::Odd3 => x >= 3.0 && x % 2.0 == 1.0,
                Rule::Even2 => x >= 2.0 && x % 2.0 == 0.0,
                Rule::AtLeastOne => x >= 1.0,
            }
    }
}

enum Slot<'a> {
    Float(&'a mut f64, Rule),
    Count(&'a mut usize, Rule),
    Flag(&'a mut bool),
    Preset(&'a mut Preset),
    Scheme(&'a mut SchemeKind),
    Geometry(&'a mut BeamGeometry),
    Scale(&'a mut Scale),
}

/// Shortest round-trip decimal form: plain notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let cold = Self {
            preset,
            gamma2_hz: 5.2e6,
            gamma3_hz: 1e3,
            gamma4_hz: 1e3,
            mu21_cm: 1e-29,
            mu32_cm: 1e-31,
            mu43_cm: 4e-26,
            density_m3: 1e16,
            length_m: 1e-2,
            probe_wavelength_m: 780e-9,
            coupling_wavelength_m: 480e-9,
            mass_kg: RB87_MASS,
            omega_c_hz: 3e6,
            delta_p_hz: 0.0,
            delta_c_hz: 0.0,
            delta_mw_hz: 0.0,
            e_mw_v_per_m: 3e-2,
            scheme: SchemeKind::Squeezed,
            alpha: 1e7,
            r: 2.5,
            hot: false,
            temperature_k: 295.0,
            cutoff_widths: DEFAULT_CUTOFF_WIDTHS,
            geometry: BeamGeometry::CounterPropagating,
            pole_refinement: true,
            quadrature_points: DEFAULT_POINTS,
            panel_intervals: DEFAULT_PANEL_INTERVALS,
            fd_rel_step: DEFAULT_REL_STEP,
            refine_tol: DEFAULT_REFINE_TOL,
            sweep_delta_c_hz: AxisSpec::linear(-5e6, 5e6, 101),
            sweep_e_mw: AxisSpec::log(1e-6, 1e-2, 61),
            sweep_r: AxisSpec::linear(0.0, 3.0, 7),
            sweep_epsilon: AxisSpec::linear(0.0, 0.5, 3),
            output: None,
        };
        match preset {
            Preset::ColdDefault => cold,
            Preset::HotDefault => Self {
                density_m3: 1e19,
                omega_c_hz: 200e6,
                e_mw_v_per_m: 1.0,
                hot: true,
                sweep_delta_c_hz: AxisSpec::linear(-100e6, 100e6, 101),
                sweep_e_mw: AxisSpec::log(1e-3, 1e1, 61),
                ..cold
            },
        }
    }

    fn slot(&mut self, key: &str) -> Option<Slot<'_>> {
        use Rule::*;
        let s = match key {
            "preset" => Slot::Preset(&mut self.preset),
            "atom.gamma2_hz" => Slot::Float(&mut self.gamma2_hz, Positive),
            "atom.gamma3_hz" => Slot::Float(&mut self.gamma3_hz, Positive),
            "atom.gamma4_hz" => Slot::Float(&mut self.gamma4_hz, Positive),
            "atom.mu21_cm" => Slot::Float(&mut self.mu21_cm, Positive),
            "atom.mu32_cm" => Slot::Float(&mut self.mu32_cm, Positive),
            "atom.mu43_cm" => Slot::Float(&mut self.mu43_cm, Positive),
            "atom.density_m3" => Slot::Float(&mut self.density_m3, Positive),
            "atom.length_m" => Slot::Float(&mut self.length_m, Positive),
            "atom.probe_wavelength_m" => Slot::Float(&mut self.probe_wavelength_m, Positive),
            "atom.coupling_wavelength_m" => Slot::Float(&mut self.coupling_wavelength_m, Positive),
            "atom.mass_kg" => Slot::Float(&mut self.mass_kg, Positive),
            "drive.omega_c_hz" => Slot::Float(&mut self.omega_c_hz, NonNegative),
            "drive.delta_p_hz" => Slot::Float(&mut self.delta_p_hz, Finite),
            "drive.delta_c_hz" => Slot::Float(&mut self.delta_c_hz, Finite),
            "drive.delta_mw_hz" => Slot::Float(&mut self.delta_mw_hz, Finite),
            "drive.e_mw_v_per_m" => Slot::Float(&mut self.e_mw_v_per_m, NonNegative),
            "scheme.kind" => Slot::Scheme(&mut self.scheme),
            "scheme.alpha" => Slot::Float(&mut self.alpha, Positive),
            "scheme.r" => Slot::Float(&mut self.r, Closed(0.0, 20.0)),
            "ensemble.hot" => Slot::Flag(&mut self.hot),
            "ensemble.temperature_k" => Slot::Float(&mut self.temperature_k, Positive),
            "ensemble.cutoff_widths" => {
                Slot::Float(&mut self.cutoff_widths, AtLeast(DEFAULT_CUTOFF_WIDTHS))
            }
            "ensemble.geometry" => Slot::Geometry(&mut self.geometry),
            "ensemble.pole_refinement" => Slot::Flag(&mut self.pole_refinement),
            "numeric.quadrature_points" => Slot::Count(&mut self.quadrature_points, Odd3),
            "numeric.panel_intervals" => Slot::Count(&mut self.panel_intervals, Even2),
            "numeric.fd_rel_step" => Slot::Float(&mut self.fd_rel_step, HalfOpen(0.0, 1e-2)),
            "numeric.refine_tol" => Slot::Float(&mut self.refine_tol, Open(0.0, 1.0)),
            _ => {
                let rest = key.strip_prefix("sweep.")?;
                let (axis, field) = rest.rsplit_once('.')?;
                let (spec, rule) = match axis {
                    "delta_c_hz" => (&mut self.sweep_delta_c_hz, Finite),
                    "e_mw_v_per_m" => (&mut self.sweep_e_mw, NonNegative),
                    "r" => (&mut self.sweep_r, Closed(0.0, 20.0)),
                    "epsilon" => (&mut self.sweep_epsilon, NonNegative),
                    _ => return None,
                };
                match field {
                    "min" => Slot::Float(&mut spec.min, rule),
                    "max" => Slot::Float(&mut spec.max, rule),
                    "count" => Slot::Count(&mut spec.count, AtLeastOne),
                    "scale" => Slot::Scale(&mut spec.scale),
                    _ => return None,
                }
            }
        };
        Some(s)
    }

    /// Current value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        let mut copy = self.clone();
        let text = match copy.slot(key)? {
            Slot::Float(v, _) => format_float(*v),
            Slot::Count(v, _) => v.to_string(),
            Slot::Flag(v) => v.to_string(),
            Slot::Preset(v) => v.name().to_string(),
            Slot::Scheme(v) => match v {
                SchemeKind::Coherent => "coherent".into(),
                SchemeKind::Squeezed => "squeezed".into(),
            },
            Slot::Geometry(v) => match v {
                BeamGeometry::CounterPropagating => "counter".into(),
                BeamGeometry::CoPropagating => "co".into(),
            },
            Slot::Scale(v) => match v {
                Scale::Linear => "linear".into(),
                Scale::Log => "log".into(),
            },
        };
        Some(text)
    }

    /// Sets one key from its textual value, range-checking numbers.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        if key == "output" {
            self.output = Some(PathBuf::from(raw));
            return Ok(());
        }
        let bad = |range: &str| ConfigError::OutOfRange {
            key: key.to_string(),
            value: raw.to_string(),
            range: range.to_string(),
        };
        let choice = |options: &[&str]| bad(&format!("one of {}", options.join(", ")));
        let slot = self.slot(key).ok_or_else(|| ConfigError::UnknownKey {
            key: key.to_string(),
            line: 0,
        })?;
        match slot {
            Slot::Float(v, rule) => {
                let x: f64 = raw.parse().map_err(|_| bad(&rule.describe()))?;
                if !rule.admits(x) {
                    return Err(bad(&rule.describe()));
                }
                *v = x;
            }
            Slot::Count(v, rule) => {
                let n: usize = raw.parse().map_err(|_| bad(&rule.describe()))?;
                if !rule.admits(n as f64) {
                    return Err(bad(&rule.describe()));
                }
                *v = n;
            }
            Slot::Flag(v) => *v = raw.parse().map_err(|_| choice(&["true", "false"]))?,
            Slot::Preset(v) => {
                *v = Preset::from_name(raw)
                    .ok_or_else(|| choice(&["cold_default", "hot_default"]))?
            }
            Slot::Scheme(v) => {
                *v = match raw {
                    "coherent" => SchemeKind::Coherent,
                    "squeezed" => SchemeKind::Squeezed,
                    _ => return Err(choice(&["coherent", "squeezed"])),
                }
            }
            Slot::Geometry(v) => {
                *v = match raw {
                    "counter" => BeamGeometry::CounterPropagating,
                    "co" => BeamGeometry::CoPropagating,
                    _ => return Err(choice(&["counter", "co"])),
                }
            }
            Slot::Scale(v) => {
                *v = match raw {
                    "linear" => Scale::Linear,
                    "log" => Scale::Log,
                    _ => return Err(choice(&["linear", "log"])),
                }
            }
        }
        Ok(())
    }

    /// Checks that span several keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let axes = [
            ("delta_c_hz", &self.sweep_delta_c_hz),
            ("e_mw_v_per_m", &self.sweep_e_mw),
            ("r", &self.sweep_r),
            ("epsilon", &self.sweep_epsilon),
        ];
        for (name, axis) in axes {
            let inconsistent = |field: &str, message: &str| ConfigError::Inconsistent {
                key: format!("sweep.{name}.{field}"),
                message: message.to_string(),
            };
            if axis.count == 1 {
                if axis.min != axis.max {
                    return Err(inconsistent(
                        "count",
                        "a single-point axis needs min == max",
                    ));
                }
            } else if !(axis.min < axis.max) {
                return Err(inconsistent("max", "must exceed min"));
            }
            if axis.scale == Scale::Log && !(axis.min > 0.0) {
                return Err(inconsistent("min", "a log axis needs min > 0"));
            }
        }
        if self.hot {
            self.ensemble().map_err(|e| ConfigError::Inconsistent {
                key: "ensemble".into(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn atom(&self) -> LadderAtom {
        LadderAtom {
            gamma2: TWO_PI * self.gamma2_hz,
            gamma3: TWO_PI * self.gamma3_hz,
            gamma4: TWO_PI * self.gamma4_hz,
            mu21: self.mu21_cm,
            mu32: self.mu32_cm,
            mu43: self.mu43_cm,
            density: self.density_m3,
            length: self.length_m,
            k_probe: TWO_PI / self.probe_wavelength_m,
            k_coupling: TWO_PI / self.coupling_wavelength_m,
            mass: self.mass_kg,
        }
    }

    /// Drive with the microwave Rabi frequency set from `drive.e_mw_v_per_m`.
    pub fn drive(&self) -> Drive {
        let atom = self.atom();
        Drive {
            delta_p: TWO_PI * self.delta_p_hz,
            delta_c: TWO_PI * self.delta_c_hz,
            delta_mw: TWO_PI * self.delta_mw_hz,
            ..Drive::resonant(
                TWO_PI * self.omega_c_hz,
                rabi_from_field(atom.mu43, self.e_mw_v_per_m),
            )
        }
    }

    pub fn readout(&self) -> Readout {
        match self.scheme {
            SchemeKind::Coherent => Readout::Coherent { alpha: self.alpha },
            SchemeKind::Squeezed => Readout::Squeezed {
                alpha: self.alpha,
                r: self.r,
            },
        }
    }

    fn ensemble(&self) -> crate::Result<ThermalEnsemble> {
        let mut ens = ThermalEnsemble::new(self.temperature_k, self.mass_kg)?;
        ens.v_max = self.cutoff_widths * ens.thermal_velocity();
        ens.n_points = self.quadrature_points;
        ens.panel_intervals = self.panel_intervals;
        ens.geometry = self.geometry;
        ens.pole_refinement = self.pole_refinement;
        ens.validate()?;
        Ok(ens)
    }

    /// The thermal ensemble when Doppler averaging is on.
    pub fn thermal_ensemble(&self) -> Option<ThermalEnsemble> {
        if self.hot {
            self.ensemble().ok()
        } else {
            None
        }
    }

    pub fn settings(&self) -> EngineSettings {
        EngineSettings {
            rel_step: self.fd_rel_step,
            refine_tol: self.refine_tol,
            threads: 0,
        }
    }

    /// `key = value` lines for every effective parameter, in key order.
    pub fn echo(&self) -> Vec<String> {
        keys()
            .iter()
            .map(|k| format!("{k} = {}", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            if let Some(&first) = seen.get(key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    first,
                    second: line,
                });
            }
            seen.insert(key.to_string(), line);
            entries.push((line, key.to_string(), value.to_string()));
        }

        let preset = match entries.iter().find(|(_, k, _)| k == "preset") {
            Some((line, _, v)) => Preset::from_name(v).ok_or_else(|| ConfigError::OutOfRange {
                key: "preset".into(),
                value: format!("{v} (line {line})"),
                range: "one of cold_default, hot_default".into(),
            })?,
            None => Preset::ColdDefault,
        };
        let mut config = Self::preset(preset);
        for (line, key, value) in &entries {
            config.set(key, value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line: *line },
                other => other,
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.echo() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
