//! CSV and JSON artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use siv_dicke::lindblad::TrajectoryRecord;
use siv_dicke::siv_model::EffectiveParams;
use siv_dicke::spin_algebra::DensityMatrix;
use siv_dicke::sweep::SweepPoint;

use crate::CliError;

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "gamma_t",
    "sx",
    "sy",
    "sz",
    "s2",
    "inv_xi_r2",
    "inv_xi_s2",
    "trace_err",
    "min_eig",
];

pub const SWEEP_HEADER: [&str; 7] = [
    "axis_value",
    "n_spins",
    "gamma_d_ratio",
    "inv_xi_r2",
    "inv_xi_s2",
    "residual",
    "status",
];

/// Trajectory tolerances on `|Tr ρ − 1|` and the smallest eigenvalue.
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

const STATUSES: [&str; 8] = [
    "ok",
    "degenerate_mean_spin",
    "non_convergence",
    "positivity_loss",
    "integration_failure",
    "non_unique_kernel",
    "dimension_guard",
    "invalid",
];

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_trajectory(path: &Path, rec: &TrajectoryRecord) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for (((gt, e), s), d) in rec
        .gamma_t()
        .iter()
        .zip(&rec.expectations)
        .zip(&rec.squeezing)
        .zip(&rec.diagnostics)
    {
        w.write_record([
            num(*gt),
            num(e.sx),
            num(e.sy),
            num(e.sz),
            num(e.s2),
            opt(s.inv_xi_r2),
            num(s.inv_xi_s2),
            opt(d.map(|d| d.trace_error)),
            opt(d.map(|d| d.min_eigenvalue)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        let (xr, xs, res) = match &p.outcome {
            Ok(v) => (opt(v.inv_xi_r2), num(v.inv_xi_s2), num(v.residual)),
            Err(_) => Default::default(),
        };
        w.write_record([
            num(p.axis_value),
            p.n_spins.to_string(),
            num(p.gamma_d_ratio),
            xr,
            xs,
            res,
            p.status(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Real and imaginary parts of every matrix element, row-major.
pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<(), CliError> {
    let d = rho.data();
    let mut rows = Vec::with_capacity(d.len());
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            rows.push(vec![i.to_string(), j.to_string(), num(d[(i, j)].re), num(d[(i, j)].im)]);
        }
    }
    write_table(path, &["row", "col", "re", "im"], &rows)
}

fn field(rec: &csv::StringRecord, i: usize, name: &str, allow_empty: bool) -> Result<Option<f64>, String> {
    let s = rec.get(i).ok_or_else(|| format!("missing column {name}"))?;
    if s.is_empty() {
        return if allow_empty {
            Ok(None)
        } else {
            Err(format!("empty {name}"))
        };
    }
    let x: f64 = s.parse().map_err(|_| format!("{name} `{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("{name} is {x}"));
    }
    Ok(Some(x))
}

fn read_back(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    if bytes.contains(&b'\r') {
        return Err("CR line ending".into());
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let found: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if found != header {
        return Err(format!("header {found:?}"));
    }
    r.records().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

/// Re-reads a trajectory CSV and checks shape, ordering and the diagnostics
/// columns against the state tolerances.
pub fn validate_trajectory(path: &Path, expected_rows: usize) -> Result<(), CliError> {
    let check = || -> Result<(), String> {
        let rows = read_back(path, &TRAJECTORY_HEADER)?;
        if rows.len() != expected_rows {
            return Err(format!("{} rows, expected {expected_rows}", rows.len()));
        }
        let mut prev = f64::NEG_INFINITY;
        for (k, r) in rows.iter().enumerate() {
            let at = |m: String| format!("row {}: {m}", k + 1);
            let t = field(r, 0, "gamma_t", false).map_err(at)?.unwrap();
            if !(t > prev) {
                return Err(at("gamma_t not increasing".into()));
            }
            prev = t;
            for (i, name) in TRAJECTORY_HEADER.iter().enumerate().skip(1) {
                let optional = matches!(*name, "inv_xi_r2" | "trace_err" | "min_eig");
                let x = field(r, i, name, optional).map_err(at)?;
                match (*name, x) {
                    ("trace_err", Some(e)) if e > TRACE_TOL => return Err(at(format!("trace error {e:e}"))),
                    ("min_eig", Some(e)) if e < -POSITIVITY_TOL => return Err(at(format!("min eigenvalue {e:e}"))),
                    _ => {}
                }
            }
        }
        Ok(())
    };
    check().map_err(|m| CliError::Validation(format!("{}: {m}", path.display())))
}

pub fn validate_sweep(path: &Path, expected_rows: usize) -> Result<(), CliError> {
    let check = || -> Result<(), String> {
        let rows = read_back(path, &SWEEP_HEADER)?;
        if rows.len() != expected_rows {
            return Err(format!("{} rows, expected {expected_rows}", rows.len()));
        }
        for (k, r) in rows.iter().enumerate() {
            let at = |m: String| format!("row {}: {m}", k + 1);
            let status = r.get(6).unwrap_or("");
            if !STATUSES.contains(&status) {
                return Err(at(format!("unknown status `{status}`")));
            }
            let ok = status == "ok";
            field(r, 0, "axis_value", false).map_err(at)?;
            field(r, 2, "gamma_d_ratio", false).map_err(at)?;
            field(r, 3, "inv_xi_r2", !ok).map_err(at)?;
            let failed = !ok && status != "degenerate_mean_spin";
            field(r, 4, "inv_xi_s2", failed).map_err(at)?;
            field(r, 5, "residual", failed).map_err(at)?;
        }
        Ok(())
    };
    check().map_err(|m| CliError::Validation(format!("{}: {m}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct EffectiveEcho {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub alpha: Option<f64>,
    pub gamma_collective: f64,
    pub gamma_dephase: f64,
}

impl From<&EffectiveParams> for EffectiveEcho {
    fn from(e: &EffectiveParams) -> Self {
        EffectiveEcho {
            u: e.u,
            v: e.v,
            r: e.r,
            alpha: e.alpha,
            gamma_collective: e.gamma_collective,
            gamma_dephase: e.gamma_dephase,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsSummary {
    pub max_trace_error: Option<f64>,
    pub max_hermiticity_error: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub renormalizations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl From<&TrajectoryRecord> for DiagnosticsSummary {
    fn from(rec: &TrajectoryRecord) -> Self {
        let have = rec.diagnostics.iter().any(Option::is_some);
        DiagnosticsSummary {
            max_trace_error: have.then(|| rec.max_trace_error()),
            max_hermiticity_error: have.then(|| rec.max_hermiticity_error()),
            min_eigenvalue: have.then(|| rec.min_eigenvalue()),
            renormalizations: rec.renormalizations.len(),
            accepted_steps: rec.accepted_steps,
            rejected_steps: rec.rejected_steps,
        }
    }
}

/// One simulated configuration inside a command.
#[derive(Debug, Serialize)]
pub struct RunEcho {
    pub label: String,
    pub n_spins: usize,
    pub basis: String,
    pub master_equation: String,
    pub initial_two_m: i64,
    pub effective: EffectiveEcho,
    pub diagnostics: Option<DiagnosticsSummary>,
    pub output: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config: BTreeMap<&'static str, String>,
    pub runs: Vec<RunEcho>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
