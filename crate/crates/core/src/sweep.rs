//! Steady-state sweeps over one scenario parameter.
//!
//! Points are independent. With the `parallel` feature they are evaluated on
//! a rayon pool; results always come back in grid order.

use crate::error::{Error, Result};
use crate::lindblad::SteadyOptions;
use crate::scenario::Scenario;
use crate::squeezing::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    R,
    GammaDephaseRatio,
    NSpins,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "r" => Some(SweepAxis::R),
            "gamma_dephase_ratio" | "gamma_d_ratio" => Some(SweepAxis::GammaDephaseRatio),
            "n_spins" => Some(SweepAxis::NSpins),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::R => "r",
            SweepAxis::GammaDephaseRatio => "gamma_dephase_ratio",
            SweepAxis::NSpins => "n_spins",
        }
    }
}

/// `count` equally spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::param("grid", "need finite bounds and at least one point"));
        }
        if count == 1 && start != stop {
            return Err(Error::param("grid", "a single point needs start = stop"));
        }
        Ok(Grid { start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.stop } else { self.start + step * k as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker budget; `None` uses the global rayon pool. Without the
    /// `parallel` feature this runs sequentially.
    Parallel { threads: Option<usize> },
}

/// Order-preserving map over independent items.
pub fn map_points<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Parallel { threads } => parallel_map(items, threads, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match threads {
        None => items.par_iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                items.par_iter().map(f).collect()
            }
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    /// `None` if the mean spin has no y-z component.
    pub inv_xi_r2: Option<f64>,
    pub inv_xi_s2: f64,
    pub residual: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub n_spins: usize,
    pub gamma_d_ratio: f64,
    pub outcome: std::result::Result<PointValues, Error>,
}

impl SweepPoint {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(v) if v.inv_xi_r2.is_none() => "degenerate_mean_spin".into(),
            Ok(_) => "ok".into(),
            Err(e) => status_code(e).into(),
        }
    }
}

fn status_code(e: &Error) -> &'static str {
    match e {
        Error::NonConvergence { .. } => "non_convergence",
        Error::PositivityLoss { .. } => "positivity_loss",
        Error::IntegrationFailure { .. } => "integration_failure",
        Error::NonUniqueKernel { .. } => "non_unique_kernel",
        Error::DimensionGuard { .. } => "dimension_guard",
        _ => "invalid",
    }
}

/// Applies `value` on `axis` to a copy of `base`.
pub fn scenario_at(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::R => s.r = value,
        SweepAxis::GammaDephaseRatio => s.gamma_dephase_ratio = value,
        SweepAxis::NSpins => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::param("n_spins", format!("{value} is not a positive integer")));
            }
            s.n_spins = value as usize;
            // The initial state follows N unless it was pinned.
            if base.initial_two_m.is_none() {
                s.initial_two_m = None;
            }
        }
    }
    Ok(s)
}

fn solve_point(s: &Scenario, opts: &SteadyOptions) -> Result<PointValues> {
    let ss = s.steady(opts)?;
    let spec = s.model_spec()?;
    let gen = crate::lindblad::Generator::new(&spec)?;
    let rep = report(&ss.rho, gen.ops())?;
    Ok(PointValues {
        inv_xi_r2: rep.inv_xi_r2,
        inv_xi_s2: rep.inv_xi_s2,
        residual: ss.residual,
        purity: ss.rho.purity(),
    })
}

/// Steady state at each value. Failures are kept per point.
pub fn run_sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    exec: Execution,
    opts: &SteadyOptions,
) -> Vec<SweepPoint> {
    map_points(values, exec, |&value| {
        let (outcome, n, gd) = match scenario_at(base, axis, value) {
            Ok(s) => (solve_point(&s, opts), s.n_spins, s.gamma_dephase_ratio),
            Err(e) => (Err(e), base.n_spins, base.gamma_dephase_ratio),
        };
        SweepPoint {
            axis_value: value,
            n_spins: n,
            gamma_d_ratio: gd,
            outcome,
        }
    })
}
