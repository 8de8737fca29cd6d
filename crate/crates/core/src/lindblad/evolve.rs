use log::debug;

use super::integrator::{Dopri5, Tolerances};
use super::{check_state, frobenius, Generator, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix};
use crate::spin_algebra::{DensityMatrix, StateDiagnostics};
use crate::squeezing::{spin_moments, SqueezingReport};

/// Trace drift beyond which the state is renormalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-9;
/// Eigenvalues below this abort the run.
pub const POSITIVITY_ABORT: f64 = -1e-6;
/// Steady-state criterion `‖dρ/dt‖_F < STEADY_RESIDUAL · Γ`.
pub const STEADY_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub tolerances: Tolerances,
    /// Compute the full eigenvalue diagnostics at every output point. These
    /// dominate the cost for large full-basis runs.
    pub diagnostics: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tolerances: Tolerances::default(),
            diagnostics: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub sz2: f64,
    pub s2: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub expectations: Vec<Expectations>,
    pub squeezing: Vec<SqueezingReport>,
    /// `None` when diagnostics were switched off.
    pub diagnostics: Vec<Option<StateDiagnostics>>,
    /// `‖dρ/dt‖_F` at each output time.
    pub residuals: Vec<f64>,
    /// `(time, trace error before renormalizing)`.
    pub renormalizations: Vec<(f64, f64)>,
    pub final_state: DensityMatrix,
    /// Rate that makes `times` dimensionless.
    pub rate_scale: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Output times in units of `1/Γ`.
    pub fn gamma_t(&self) -> Vec<f64> {
        self.times.iter().map(|t| t * self.rate_scale).collect()
    }

    /// Earliest output time from which `‖dρ/dt‖_F` stays below
    /// `STEADY_RESIDUAL · Γ` for the rest of the record.
    pub fn time_to_steady(&self) -> Option<f64> {
        let limit = STEADY_RESIDUAL * self.rate_scale;
        let mut first = None;
        for (t, r) in self.times.iter().zip(&self.residuals).rev() {
            if *r < limit {
                first = Some(*t);
            } else {
                break;
            }
        }
        first
    }

    /// Earliest output time from which `1/ξ_R'²` stays within `tol` of its
    /// final recorded value.
    pub fn time_to_settle(&self, tol: f64) -> Option<f64> {
        let last = self.squeezing.last()?.inv_xi_r2?;
        let mut first = None;
        for (t, s) in self.times.iter().zip(&self.squeezing).rev() {
            match s.inv_xi_r2 {
                Some(x) if (x - last).abs() <= tol => first = Some(*t),
                _ => break,
            }
        }
        first
    }

    pub fn max_trace_error(&self) -> f64 {
        self.diagnostics.iter().flatten().map(|d| d.trace_error).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.diagnostics
            .iter()
            .flatten()
            .map(|d| d.hermiticity_error)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .flatten()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_t |⟨S²⟩(t) − ⟨S²⟩(0)|`.
    pub fn s2_drift(&self) -> f64 {
        let Some(first) = self.expectations.first() else {
            return 0.0;
        };
        self.expectations
            .iter()
            .map(|e| (e.s2 - first.s2).abs())
            .fold(0.0, f64::max)
    }
}

/// `count` equally spaced points on `[0, t_end]`, endpoints included.
pub fn output_grid(t_end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..count)
            .map(|k| if k + 1 == count { t_end } else { t_end * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

pub fn evolve(rho0: &DensityMatrix, spec: &ModelSpec, t_end: f64, grid: &[f64]) -> Result<TrajectoryRecord> {
    evolve_with(rho0, spec, t_end, grid, &EvolveOptions::default())
}

pub fn evolve_with(
    rho0: &DensityMatrix,
    spec: &ModelSpec,
    t_end: f64,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<TrajectoryRecord> {
    check_state(rho0, spec)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::param("t_end", "must be positive and finite"));
    }
    if grid.is_empty() {
        return Err(Error::param("output_grid", "must not be empty"));
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) || *grid.last().unwrap() > t_end {
        return Err(Error::param("output_grid", "must be strictly increasing within [0, t_end]"));
    }
    let gen = Generator::new(spec)?;
    let basis = spec.basis();
    let n = basis.n_spins();
    let mut stepper = Dopri5::new(|y: &CMatrix| gen.apply(y), 0.0, rho0.data().clone(), opts.tolerances);

    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(grid.len()),
        expectations: Vec::with_capacity(grid.len()),
        squeezing: Vec::with_capacity(grid.len()),
        diagnostics: Vec::with_capacity(grid.len()),
        residuals: Vec::with_capacity(grid.len()),
        renormalizations: Vec::new(),
        final_state: rho0.clone(),
        rate_scale: spec.rate_scale(),
        accepted_steps: 0,
        rejected_steps: 0,
    };

    for &t_out in grid {
        while stepper.t() < t_out {
            stepper.step(t_out)?;
            let tr = stepper.y().trace();
            if (tr - real(1.0)).norm() > RENORMALIZE_THRESHOLD {
                let t = stepper.t();
                debug!("renormalizing at t = {t}: trace = {tr}");
                rec.renormalizations.push((t, (tr - real(1.0)).norm()));
                let y = stepper.y() / tr;
                stepper.replace_state(y);
            }
        }
        let state = DensityMatrix::from_raw(basis, stepper.y().clone())?;
        let diag = opts.diagnostics.then(|| state.diagnostics());
        if let Some(d) = &diag {
            if d.min_eigenvalue < POSITIVITY_ABORT {
                return Err(Error::PositivityLoss {
                    time: t_out,
                    min_eigenvalue: d.min_eigenvalue,
                });
            }
        }
        let m = spin_moments(&state, gen.ops())?;
        rec.times.push(t_out);
        rec.expectations.push(Expectations {
            sx: m.mean[0],
            sy: m.mean[1],
            sz: m.mean[2],
            sz2: m.second[2][2],
            s2: m.total_spin_squared(),
        });
        rec.squeezing.push(SqueezingReport::from_moments(&m, n));
        rec.diagnostics.push(diag);
        rec.residuals.push(frobenius(stepper.derivative()));
    }
    // Integrate any tail past the last output point.
    stepper.advance_to(t_end)?;
    rec.accepted_steps = stepper.accepted_steps();
    rec.rejected_steps = stepper.rejected_steps();
    rec.final_state = DensityMatrix::from_raw(basis, stepper.y().clone())?;
    Ok(rec)
}
