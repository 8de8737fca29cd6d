use log::{debug, warn};

use super::evolve::{RENORMALIZE_THRESHOLD, STEADY_RESIDUAL};
use super::integrator::{Dopri5, Tolerances};
use super::{check_state, frobenius, liouvillian_matrix, Generator, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, real, CMatrix};
use crate::spin_algebra::{DensityMatrix, SpinBasis, POSITIVITY_TOL};

/// `Auto` uses the null-space solver up to this state dimension.
pub const NULLSPACE_AUTO_DIM: usize = 16;
/// Singular values below `KERNEL_TOL · σ_max` span the kernel.
pub const KERNEL_TOL: f64 = 1e-9;
/// Integrator tolerances used while evolving towards a steady state.
pub const STEADY_RTOL: f64 = 1e-12;
pub const STEADY_ATOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStrategy {
    Auto,
    NullSpace,
    Evolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub strategy: SteadyStrategy,
    /// Also run the evolution strategy after a null-space solve and compare.
    pub cross_check: bool,
    /// Evolution cap in units of `1/Γ`.
    pub gamma_t_cap: f64,
    pub tolerances: Tolerances,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            strategy: SteadyStrategy::Auto,
            cross_check: true,
            gamma_t_cap: 1e3,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverUsed {
    NullSpace,
    Evolution,
}

impl SolverUsed {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverUsed::NullSpace => "nullspace",
            SolverUsed::Evolution => "evolve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrossCheck {
    /// Trace distance between the two solutions.
    Agreed { trace_distance: f64 },
    /// The evolution strategy hit its cap first.
    NotConverged { residual: f64 },
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub solver: SolverUsed,
    /// `‖dρ/dt‖_F` at the returned state.
    pub residual: f64,
    /// Kernel dimension found by the null-space solver.
    pub kernel_dim: Option<usize>,
    /// Integration time spent, in units of `1/Γ` (evolution only).
    pub gamma_t: Option<f64>,
    pub cross_check: Option<CrossCheck>,
}

/// Kernel vectors of the Liouvillian, as unit-trace Hermitian matrices.
fn null_space(spec: &ModelSpec) -> Result<Vec<CMatrix>> {
    let l = liouvillian_matrix(spec)?;
    let dim = spec.basis().dim();
    let svd = l.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let sv = &svd.singular_values;
    let s_max = sv.iter().copied().fold(0.0, f64::max);
    let mut kernel = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        if s <= KERNEL_TOL * s_max.max(f64::MIN_POSITIVE) {
            let v: Vec<_> = v_t.row(i).iter().map(|z| z.conj()).collect();
            kernel.push(CMatrix::from_column_slice(dim, dim, &v));
        }
    }
    debug!("Liouvillian kernel dimension {} (dim {dim})", kernel.len());
    Ok(kernel)
}

fn normalize_kernel_vector(x: &CMatrix) -> Result<CMatrix> {
    let tr = x.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::InvalidState("kernel vector has vanishing trace".into()));
    }
    Ok(linalg::hermitian_part(&(x / tr)))
}

struct EvolutionResult {
    rho: CMatrix,
    residual: f64,
    gamma_t: f64,
}

fn evolve_to_steady(gen: &Generator, rho0: &CMatrix, opts: &SteadyOptions) -> Result<EvolutionResult> {
    let rate = gen.spec().rate_scale();
    let residual0 = frobenius(&gen.apply(rho0));
    if rate == 0.0 || residual0 == 0.0 {
        return Ok(EvolutionResult {
            rho: rho0.clone(),
            residual: residual0,
            gamma_t: 0.0,
        });
    }
    let limit = STEADY_RESIDUAL * rate;
    let t_cap = opts.gamma_t_cap / rate;
    // With the trajectory tolerances the residual floors near atol·‖L‖, which is
    // above the steady criterion, so the search runs tighter.
    let tol = Tolerances {
        rtol: opts.tolerances.rtol.min(STEADY_RTOL),
        atol: opts.tolerances.atol.min(STEADY_ATOL),
    };
    let mut stepper = Dopri5::new(|y: &CMatrix| gen.apply(y), 0.0, rho0.clone(), tol);
    loop {
        let residual = frobenius(stepper.derivative());
        if residual < limit {
            return Ok(EvolutionResult {
                rho: stepper.y().clone(),
                residual,
                gamma_t: stepper.t() * rate,
            });
        }
        if stepper.t() >= t_cap {
            return Err(Error::NonConvergence {
                gamma_t: opts.gamma_t_cap,
                residual,
            });
        }
        stepper.step(t_cap)?;
        let tr = stepper.y().trace();
        if (tr - real(1.0)).norm() > RENORMALIZE_THRESHOLD {
            let y = stepper.y() / tr;
            stepper.replace_state(y);
        }
    }
}

fn finish(basis: SpinBasis, data: CMatrix) -> Result<DensityMatrix> {
    let rho = DensityMatrix::from_raw(basis, data)?;
    let d = rho.diagnostics();
    if d.min_eigenvalue < -POSITIVITY_TOL {
        return Err(Error::PositivityLoss {
            time: f64::INFINITY,
            min_eigenvalue: d.min_eigenvalue,
        });
    }
    Ok(rho)
}

/// Steady state of `spec`.
///
/// The null-space solver needs a one-dimensional kernel. When the kernel is
/// larger (several conserved S sectors) the state is selected by evolving
/// `rho0`; without `rho0` that case is `NonUniqueKernel`.
pub fn steady_state(spec: &ModelSpec, rho0: Option<&DensityMatrix>, opts: &SteadyOptions) -> Result<SteadyState> {
    if let Some(r) = rho0 {
        check_state(r, spec)?;
    }
    let basis = spec.basis();
    let gen = Generator::new(spec)?;

    let use_nullspace = match opts.strategy {
        SteadyStrategy::NullSpace => true,
        SteadyStrategy::Evolution => false,
        SteadyStrategy::Auto => basis.dim() <= NULLSPACE_AUTO_DIM,
    };

    if use_nullspace {
        let kernel = null_space(spec)?;
        let kernel_dim = kernel.len();
        if kernel_dim == 1 {
            let data = normalize_kernel_vector(&kernel[0])?;
            let residual = frobenius(&gen.apply(&data));
            let rho = finish(basis, data)?;
            let cross_check = match (opts.cross_check, rho0) {
                (true, Some(r0)) => Some(match evolve_to_steady(&gen, r0.data(), opts) {
                    Ok(ev) => CrossCheck::Agreed {
                        trace_distance: linalg::trace_distance(&ev.rho, rho.data()),
                    },
                    Err(Error::NonConvergence { residual, .. }) => {
                        warn!("cross-check evolution did not converge (residual {residual:e})");
                        CrossCheck::NotConverged { residual }
                    }
                    Err(e) => return Err(e),
                }),
                _ => None,
            };
            return Ok(SteadyState {
                rho,
                solver: SolverUsed::NullSpace,
                residual,
                kernel_dim: Some(1),
                gamma_t: None,
                cross_check,
            });
        }
        if kernel_dim == 0 {
            return Err(Error::NonConvergence {
                gamma_t: 0.0,
                residual: f64::NAN,
            });
        }
        let Some(r0) = rho0 else {
            return Err(Error::NonUniqueKernel {
                kernel_dim: Some(kernel_dim),
            });
        };
        debug!("kernel dimension {kernel_dim}; selecting the sector by evolution");
        let ev = evolve_to_steady(&gen, r0.data(), opts)?;
        return Ok(SteadyState {
            rho: finish(basis, linalg::hermitian_part(&ev.rho))?,
            solver: SolverUsed::Evolution,
            residual: ev.residual,
            kernel_dim: Some(kernel_dim),
            gamma_t: Some(ev.gamma_t),
            cross_check: None,
        });
    }

    let start = match rho0 {
        Some(r) => r.clone(),
        None if spec.has_multiple_sectors() => {
            return Err(Error::NonUniqueKernel { kernel_dim: None });
        }
        None => DensityMatrix::maximally_mixed(basis),
    };
    let ev = evolve_to_steady(&gen, start.data(), opts)?;
    Ok(SteadyState {
        rho: finish(basis, linalg::hermitian_part(&ev.rho))?,
        solver: SolverUsed::Evolution,
        residual: ev.residual,
        kernel_dim: None,
        gamma_t: Some(ev.gamma_t),
        cross_check: None,
    })
}
