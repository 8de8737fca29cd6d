//! Flat `key = value` run configuration.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines are
//! ignored, keys are lowercase `[a-z0-9_]`. A key may appear once per file.
//! `--set key=value` overrides are applied after the file, in order, so the
//! last one wins.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use siv_dicke::lindblad::SteadyStrategy;
use siv_dicke::scenario::{BasisChoice, Placement, Scenario};
use siv_dicke::siv_model::{self, SivPhysicalParams};
use siv_dicke::sweep::{Execution, SweepAxis};
use siv_dicke::waveguide::{self, WaveguideParams};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line { file: String, line: usize },
    Override,
    Preset(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { file, line } => write!(f, "{file}:{line}"),
            Origin::Override => write!(f, "--set"),
            Origin::Preset(name) => write!(f, "preset {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(origin: Option<Origin>, key: Option<&str>, message: impl Into<String>) -> Self {
        ConfigError {
            origin,
            key: key.map(str::to_string),
            message: message.into(),
        }
    }

    /// An error about the combination of fields rather than one entry.
    pub fn field(key: &str, message: impl Into<String>) -> Self {
        ConfigError::new(None, Some(key), message)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(o) = &self.origin {
            write!(f, "{o}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "field `{k}`: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

pub fn parse_text(text: &str, file: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line {
            file: file.to_string(),
            line: i + 1,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::new(Some(origin), None, format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim();
        check_key(key).map_err(|m| ConfigError::new(Some(origin.clone()), Some(key), m))?;
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(ConfigError::new(
                Some(origin),
                Some(key),
                format!("duplicate key (first set at {})", prev.origin),
            ));
        }
        out.push(Entry {
            key: key.to_string(),
            value: v.trim().to_string(),
            origin,
        });
    }
    Ok(out)
}

pub fn parse_override(s: &str) -> Result<Entry, ConfigError> {
    let Some((k, v)) = s.split_once('=') else {
        return Err(ConfigError::new(Some(Origin::Override), None, format!("expected `key=value`, got `{s}`")));
    };
    let key = k.trim();
    check_key(key).map_err(|m| ConfigError::new(Some(Origin::Override), Some(key), m))?;
    Ok(Entry {
        key: key.to_string(),
        value: v.trim().to_string(),
        origin: Origin::Override,
    })
}

fn check_key(key: &str) -> Result<(), String> {
    if key.is_empty() {
        return Err("empty key".into());
    }
    if !key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
        return Err("keys use lowercase letters, digits and `_` only".into());
    }
    if !KEYS.contains(&key) {
        return Err("unknown key".into());
    }
    Ok(())
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "n_spins",
    "r",
    "gamma_collective",
    "gamma_dephase_ratio",
    "initial_m_s",
    "basis",
    "t_end_gamma",
    "output_points",
    "placement",
    "positions",
    "wavelength",
    "diagnostics",
    "strategy",
    "cross_check",
    "gamma_t_cap",
    "dump_rho",
    "axis",
    "start",
    "stop",
    "count",
    "execution",
    "threads",
    "n_values",
    "gamma_dephase_ratios",
    "length",
    "width",
    "thickness",
    "density",
    "group_velocity",
    "strain_sensitivity",
    "transverse_factor",
    "lambda_g_ghz",
    "upsilon_x_ghz",
    "upsilon_y_ghz",
    "b0",
    "gamma_s",
    "f_quench",
    "gamma_l",
    "omega_1_mhz",
    "omega_2_mhz",
    "delta_1_mhz",
    "delta_2_mhz",
    "omega_a_ghz",
    "t2",
    "allow_nonadiabatic",
];

/// Drive used by `couple` when none is configured: Ω₂/Δ₂ = 0.1, Ω₁/Δ₁ = 0.02.
const DEFAULT_DRIVE_MHZ: [f64; 4] = [2.0, 10.0, 100.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_spins: usize,
    /// `None` until set; drives may supply it instead.
    pub r: Option<f64>,
    pub gamma_collective: f64,
    pub gamma_dephase_ratio: f64,
    pub initial_m_s: Option<f64>,
    pub basis: BasisChoice,
    pub t_end_gamma: f64,
    pub output_points: usize,
    pub explicit_placement: bool,
    pub positions: Vec<f64>,
    pub wavelength: f64,
    pub diagnostics: bool,

    pub strategy: SteadyStrategy,
    pub cross_check: bool,
    pub gamma_t_cap: f64,
    pub dump_rho: bool,

    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub parallel: bool,
    pub threads: Option<usize>,
    pub n_values: Option<Vec<usize>>,
    pub gamma_dephase_ratios: Option<Vec<f64>>,

    pub waveguide: WaveguideParams,

    pub lambda_g_ghz: f64,
    pub upsilon_x_ghz: f64,
    pub upsilon_y_ghz: f64,
    pub b0: f64,
    pub gamma_s: f64,
    pub f_quench: f64,
    pub gamma_l: f64,

    /// Ω₁, Ω₂, Δ₁, Δ₂ in MHz (ordinary frequency).
    pub drive_mhz: [Option<f64>; 4],
    pub omega_a_ghz: f64,
    pub t2: Option<f64>,
    pub allow_nonadiabatic: bool,

    /// Keys that were set explicitly, with where.
    pub set_by: BTreeMap<String, Origin>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let siv = SivPhysicalParams::reference();
        RunConfig {
            n_spins: 2,
            r: None,
            gamma_collective: 1.0,
            gamma_dephase_ratio: 0.0,
            initial_m_s: None,
            basis: BasisChoice::Auto,
            t_end_gamma: 20.0,
            output_points: 400,
            explicit_placement: false,
            positions: Vec::new(),
            wavelength: 1.0,
            diagnostics: true,
            strategy: SteadyStrategy::Auto,
            cross_check: true,
            gamma_t_cap: 1e3,
            dump_rho: false,
            axis: SweepAxis::R,
            start: 0.0,
            stop: 3.0,
            count: 31,
            parallel: true,
            threads: None,
            n_values: None,
            gamma_dephase_ratios: None,
            waveguide: WaveguideParams::default(),
            lambda_g_ghz: siv.lambda_g / TWO_PI / 1e9,
            upsilon_x_ghz: siv.upsilon_x / TWO_PI / 1e9,
            upsilon_y_ghz: siv.upsilon_y / TWO_PI / 1e9,
            b0: siv.b0,
            gamma_s: siv.gamma_s,
            f_quench: siv.f_quench,
            gamma_l: siv.gamma_l,
            drive_mhz: [None; 4],
            omega_a_ghz: siv_model::GROUND_SPLITTING / TWO_PI / 1e9,
            t2: Some(siv_model::T2_100MK),
            allow_nonadiabatic: false,
            set_by: BTreeMap::new(),
        }
    }
}

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{v}` is not finite"));
    }
    Ok(x)
}

fn count(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{v}` is not `true` or `false`")),
    }
}

fn list<T>(v: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err("empty list".into());
    }
    items.into_iter().map(item).collect()
}

fn optional(v: &str, f: fn(&str) -> Result<f64, String>) -> Result<Option<f64>, String> {
    if v == "none" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl RunConfig {
    /// Defaults, then `entries` in order.
    pub fn from_entries(entries: &[Entry]) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for e in entries {
            cfg.set(&e.key, &e.value)
                .map_err(|m| ConfigError::new(Some(e.origin.clone()), Some(&e.key), m))?;
            cfg.set_by.insert(e.key.clone(), e.origin.clone());
        }
        Ok(cfg)
    }

    /// Preset entries, then the file (if any), then overrides.
    pub fn load(
        preset: &[(&str, &str)],
        preset_name: &'static str,
        file: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut entries: Vec<Entry> = preset
            .iter()
            .map(|(k, v)| Entry {
                key: k.to_string(),
                value: v.to_string(),
                origin: Origin::Preset(preset_name),
            })
            .collect();
        if let Some(path) = file {
            let name = path.display().to_string();
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new(None, None, format!("cannot read {name}: {e}")))?;
            entries.extend(parse_text(&text, &name)?);
        }
        for s in overrides {
            entries.push(parse_override(s)?);
        }
        Self::from_entries(&entries)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.set_by.contains_key(key)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let wg = &mut self.waveguide;
        match key {
            "n_spins" => self.n_spins = count(v)?,
            "r" => self.r = Some(num(v)?),
            "gamma_collective" => self.gamma_collective = num(v)?,
            "gamma_dephase_ratio" => self.gamma_dephase_ratio = num(v)?,
            "initial_m_s" => self.initial_m_s = optional(v, num)?,
            "basis" => {
                self.basis = match v {
                    "full" => BasisChoice::Full,
                    "dicke" => BasisChoice::Dicke,
                    "auto" => BasisChoice::Auto,
                    _ => return Err(format!("`{v}` is not one of full, dicke, auto")),
                }
            }
            "t_end_gamma" => self.t_end_gamma = num(v)?,
            "output_points" => self.output_points = count(v)?,
            "placement" => {
                self.explicit_placement = match v {
                    "lattice" => false,
                    "explicit" => true,
                    _ => return Err(format!("`{v}` is not one of lattice, explicit")),
                }
            }
            "positions" => self.positions = list(v, num)?,
            "wavelength" => self.wavelength = num(v)?,
            "diagnostics" => self.diagnostics = flag(v)?,
            "strategy" => {
                self.strategy = match v {
                    "auto" => SteadyStrategy::Auto,
                    "nullspace" => SteadyStrategy::NullSpace,
                    "evolve" => SteadyStrategy::Evolution,
                    _ => return Err(format!("`{v}` is not one of auto, nullspace, evolve")),
                }
            }
            "cross_check" => self.cross_check = flag(v)?,
            "gamma_t_cap" => self.gamma_t_cap = num(v)?,
            "dump_rho" => self.dump_rho = flag(v)?,
            "axis" => {
                self.axis = SweepAxis::parse(v).ok_or_else(|| format!("`{v}` is not one of r, gamma_dephase_ratio, n_spins"))?
            }
            "start" => self.start = num(v)?,
            "stop" => self.stop = num(v)?,
            "count" => self.count = count(v)?,
            "execution" => {
                self.parallel = match v {
                    "parallel" => true,
                    "sequential" => false,
                    _ => return Err(format!("`{v}` is not one of parallel, sequential")),
                }
            }
            "threads" => {
                self.threads = if v == "none" { None } else { Some(count(v)?) };
            }
            "n_values" => self.n_values = Some(list(v, count)?),
            "gamma_dephase_ratios" => self.gamma_dephase_ratios = Some(list(v, num)?),
            "length" => wg.length = num(v)?,
            "width" => wg.width = num(v)?,
            "thickness" => wg.thickness = num(v)?,
            "density" => wg.density = num(v)?,
            "group_velocity" => wg.group_velocity = num(v)?,
            "strain_sensitivity" => wg.strain_sensitivity = num(v)?,
            "transverse_factor" => wg.transverse_factor = num(v)?,
            "lambda_g_ghz" => self.lambda_g_ghz = num(v)?,
            "upsilon_x_ghz" => self.upsilon_x_ghz = num(v)?,
            "upsilon_y_ghz" => self.upsilon_y_ghz = num(v)?,
            "b0" => self.b0 = num(v)?,
            "gamma_s" => self.gamma_s = num(v)?,
            "f_quench" => self.f_quench = num(v)?,
            "gamma_l" => self.gamma_l = num(v)?,
            "omega_1_mhz" => self.drive_mhz[0] = Some(num(v)?),
            "omega_2_mhz" => self.drive_mhz[1] = Some(num(v)?),
            "delta_1_mhz" => self.drive_mhz[2] = Some(num(v)?),
            "delta_2_mhz" => self.drive_mhz[3] = Some(num(v)?),
            "omega_a_ghz" => self.omega_a_ghz = num(v)?,
            "t2" => self.t2 = optional(v, num)?,
            "allow_nonadiabatic" => self.allow_nonadiabatic = flag(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Resolved value of every key, as it would be written back.
    pub fn echo(&self) -> BTreeMap<&'static str, String> {
        let f = |x: f64| format!("{x:?}");
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), f);
        let fl = |xs: &[f64]| xs.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",");
        let wg = &self.waveguide;
        let drive = self.drive();
        let mut m = BTreeMap::new();
        for key in KEYS {
            let v = match *key {
                "n_spins" => self.n_spins.to_string(),
                "r" => opt(self.r),
                "gamma_collective" => f(self.gamma_collective),
                "gamma_dephase_ratio" => f(self.gamma_dephase_ratio),
                "initial_m_s" => opt(self.initial_m_s),
                "basis" => self.basis.as_str().to_string(),
                "t_end_gamma" => f(self.t_end_gamma),
                "output_points" => self.output_points.to_string(),
                "placement" => if self.explicit_placement { "explicit" } else { "lattice" }.to_string(),
                "positions" => fl(&self.positions),
                "wavelength" => f(self.wavelength),
                "diagnostics" => self.diagnostics.to_string(),
                "strategy" => match self.strategy {
                    SteadyStrategy::Auto => "auto",
                    SteadyStrategy::NullSpace => "nullspace",
                    SteadyStrategy::Evolution => "evolve",
                }
                .to_string(),
                "cross_check" => self.cross_check.to_string(),
                "gamma_t_cap" => f(self.gamma_t_cap),
                "dump_rho" => self.dump_rho.to_string(),
                "axis" => self.axis.as_str().to_string(),
                "start" => f(self.start),
                "stop" => f(self.stop),
                "count" => self.count.to_string(),
                "execution" => if self.parallel { "parallel" } else { "sequential" }.to_string(),
                "threads" => self.threads.map_or_else(|| "none".into(), |t| t.to_string()),
                "n_values" => self.n_values.as_ref().map_or_else(
                    || "none".into(),
                    |v| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
                ),
                "gamma_dephase_ratios" => self.gamma_dephase_ratios.as_ref().map_or_else(|| "none".into(), |v| fl(v)),
                "length" => f(wg.length),
                "width" => f(wg.width),
                "thickness" => f(wg.thickness),
                "density" => f(wg.density),
                "group_velocity" => f(wg.group_velocity),
                "strain_sensitivity" => f(wg.strain_sensitivity),
                "transverse_factor" => f(wg.transverse_factor),
                "lambda_g_ghz" => f(self.lambda_g_ghz),
                "upsilon_x_ghz" => f(self.upsilon_x_ghz),
                "upsilon_y_ghz" => f(self.upsilon_y_ghz),
                "b0" => f(self.b0),
                "gamma_s" => f(self.gamma_s),
                "f_quench" => f(self.f_quench),
                "gamma_l" => f(self.gamma_l),
                "omega_1_mhz" => f(drive[0]),
                "omega_2_mhz" => f(drive[1]),
                "delta_1_mhz" => f(drive[2]),
                "delta_2_mhz" => f(drive[3]),
                "omega_a_ghz" => f(self.omega_a_ghz),
                "t2" => opt(self.t2),
                "allow_nonadiabatic" => self.allow_nonadiabatic.to_string(),
                _ => unreachable!("every key is echoed"),
            };
            m.insert(*key, v);
        }
        m
    }

    /// Drive in MHz with defaults filled in.
    pub fn drive(&self) -> [f64; 4] {
        let mut d = DEFAULT_DRIVE_MHZ;
        for (slot, v) in d.iter_mut().zip(self.drive_mhz) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        d
    }

    pub fn drive_is_set(&self) -> bool {
        self.drive_mhz.iter().any(Option::is_some)
    }

    pub fn drive_params(&self) -> Result<siv_model::DriveParams, siv_dicke::Error> {
        let [o1, o2, d1, d2] = self.drive().map(|x| x * TWO_PI * 1e6);
        siv_model::DriveParams::new(o1, o2, d1, d2, self.omega_a_ghz * TWO_PI * 1e9)
    }

    pub fn siv_params(&self) -> Result<SivPhysicalParams, siv_dicke::Error> {
        let ghz = TWO_PI * 1e9;
        SivPhysicalParams::new(
            self.lambda_g_ghz * ghz,
            self.upsilon_x_ghz * ghz,
            self.upsilon_y_ghz * ghz,
            self.b0,
            self.gamma_s,
            self.f_quench,
            self.gamma_l,
        )
    }

    pub fn emitter_array(&self, n: usize) -> Result<waveguide::EmitterArray, siv_dicke::Error> {
        if self.explicit_placement {
            waveguide::EmitterArray::new(self.positions.clone(), self.wavelength)
        } else {
            waveguide::place_on_lattice(n, self.wavelength)
        }
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel { threads: self.threads }
        } else {
            Execution::Sequential
        }
    }

    /// `2 m_s`, if `initial_m_s` is set and a half-integer.
    pub fn initial_two_m(&self) -> Result<Option<i64>, ConfigError> {
        match self.initial_m_s {
            None => Ok(None),
            Some(m) => {
                let two_m = 2.0 * m;
                if two_m.fract() != 0.0 {
                    return Err(ConfigError::field("initial_m_s", format!("{m} is not a multiple of 1/2")));
                }
                Ok(Some(two_m as i64))
            }
        }
    }

    /// The simulated scenario; `r` comes from the drives when only those are set.
    pub fn scenario(&self, r_from_drive: Option<f64>) -> Result<Scenario, ConfigError> {
        let r = match (self.r, r_from_drive) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::field("r", "set either r or the drive amplitudes, not both"));
            }
            (Some(r), None) | (None, Some(r)) => r,
            (None, None) => 0.2,
        };
        if self.explicit_placement && !self.is_set("positions") {
            return Err(ConfigError::field("positions", "explicit placement needs positions"));
        }
        let placement = if self.explicit_placement {
            Placement::Explicit {
                positions: self.positions.clone(),
                wavelength: self.wavelength,
            }
        } else {
            Placement::Lattice
        };
        Ok(Scenario {
            n_spins: self.n_spins,
            r,
            gamma_collective: self.gamma_collective,
            gamma_dephase_ratio: self.gamma_dephase_ratio,
            initial_two_m: self.initial_two_m()?,
            basis: self.basis,
            placement,
            t_end_gamma: self.t_end_gamma,
            output_points: self.output_points,
        })
    }
}
