//! Master-equation generators, time integration and steady states.
//!
//! Three forms are provided:
//!
//! - `GeneralKernel`: `Σ_{j,m} J_{j,m}[D_j⁻ ρ D_m⁺ − ρ D_m⁺ D_j⁻] + H.c.` with
//!   per-site squeezed operators `D_j⁻` and a complex emitter kernel.
//! - `Dicke`: `Γ 𝒟[D⁻] ρ` with the collective `D⁻ = u S⁻ + v S⁺`.
//! - `DickeWithDephasing`: the Dicke form plus `Γ_D Σ_j 𝒟[σ_z^j] ρ`.
//!
//! Right-hand sides are applied matrix-free through sparse operators; an
//! explicit Liouvillian is built only for the null-space steady-state solver.

mod evolve;
pub mod integrator;
mod liouvillian;
mod steady;

pub use evolve::{evolve, evolve_with, output_grid, EvolveOptions, Expectations, TrajectoryRecord};
pub use liouvillian::{liouvillian_matrix, MAX_LIOUVILLIAN_DIM};
pub use steady::{
    steady_state, CrossCheck, SolverUsed, SteadyOptions, SteadyState, SteadyStrategy,
    NULLSPACE_AUTO_DIM,
};

use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix, SparseMatrix};
use crate::siv_model::EffectiveParams;
use crate::spin_algebra::{build_operators, Collective, DensityMatrix, SpinBasis, SpinOperatorSet};
use crate::waveguide::DipoleKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MasterEquation {
    GeneralKernel,
    Dicke,
    DickeWithDephasing,
}

/// A fully specified master equation.
///
/// `Dicke` ignores `eff.gamma_dephase`; the dephasing channel is only
/// switched on by the `DickeWithDephasing` form.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    basis: SpinBasis,
    eff: EffectiveParams,
    kernel: Option<DipoleKernel>,
    form: MasterEquation,
}

impl ModelSpec {
    pub fn new(
        basis: SpinBasis,
        eff: EffectiveParams,
        kernel: Option<DipoleKernel>,
        form: MasterEquation,
    ) -> Result<Self> {
        eff.validate()?;
        if matches!(form, MasterEquation::GeneralKernel | MasterEquation::DickeWithDephasing)
            && !basis.is_full()
        {
            return Err(Error::BasisMismatch(format!(
                "{form:?} needs the full basis; the Dicke sector cannot host site-resolved terms"
            )));
        }
        if let Some(k) = &kernel {
            if form != MasterEquation::GeneralKernel {
                return Err(Error::param("kernel", "only used by the general-kernel form"));
            }
            if k.len() != basis.n_spins() {
                return Err(Error::DimensionMismatch {
                    expected: basis.n_spins(),
                    found: k.len(),
                });
            }
            let g = eff.gamma_collective;
            if (k.gamma_collective() - g).abs() > 1e-12 * g.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::param("kernel", "collective rate differs from the effective Γ"));
            }
        }
        Ok(ModelSpec {
            basis,
            eff,
            kernel,
            form,
        })
    }

    pub fn dicke(basis: SpinBasis, eff: EffectiveParams) -> Result<Self> {
        Self::new(basis, eff, None, MasterEquation::Dicke)
    }

    pub fn dicke_with_dephasing(n_spins: usize, eff: EffectiveParams) -> Result<Self> {
        Self::new(SpinBasis::full(n_spins)?, eff, None, MasterEquation::DickeWithDephasing)
    }

    /// General form; `None` uses the ideal kernel `J = Γ/2`.
    pub fn general(n_spins: usize, eff: EffectiveParams, kernel: Option<DipoleKernel>) -> Result<Self> {
        Self::new(SpinBasis::full(n_spins)?, eff, kernel, MasterEquation::GeneralKernel)
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }
    pub fn eff(&self) -> &EffectiveParams {
        &self.eff
    }
    pub fn kernel(&self) -> Option<&DipoleKernel> {
        self.kernel.as_ref()
    }
    pub fn form(&self) -> MasterEquation {
        self.form
    }

    pub fn gamma(&self) -> f64 {
        self.eff.gamma_collective
    }

    /// Dephasing rate actually entering the generator.
    pub fn gamma_dephase(&self) -> f64 {
        match self.form {
            MasterEquation::DickeWithDephasing => self.eff.gamma_dephase,
            _ => 0.0,
        }
    }

    /// Rate used to make the steady-state criterion and time caps
    /// dimensionless: Γ, or Γ_D when the collective channel is off.
    pub fn rate_scale(&self) -> f64 {
        let g = self.gamma();
        if g > 0.0 {
            g
        } else {
            self.gamma_dephase()
        }
    }

    /// Kernel matrix for the general form (ideal if none was given).
    pub fn kernel_matrix(&self) -> CMatrix {
        match &self.kernel {
            Some(k) => k.matrix().clone(),
            None => DipoleKernel::ideal(self.basis.n_spins(), self.gamma()).matrix().clone(),
        }
    }

    /// True if the steady state is known to depend on the initial sector:
    /// the full basis without dephasing conserves S² and has one fixed point
    /// per sector.
    pub fn has_multiple_sectors(&self) -> bool {
        self.basis.is_full() && self.basis.n_spins() > 1 && self.gamma_dephase() == 0.0
    }
}

/// Site-resolved pieces of the general form: `E_m = Σ_j J_{j,m} D_j⁻` and
/// `F = Σ_m D_m⁺ E_m`, so that the first half is `Σ_m E_m ρ D_m⁺ − ρ F`.
#[derive(Debug, Clone)]
struct GeneralTerms {
    e: Vec<SparseMatrix>,
    d_plus: Vec<SparseMatrix>,
    f: SparseMatrix,
}

/// Precomputed right-hand side `ρ ↦ dρ/dt` for one `ModelSpec`.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: ModelSpec,
    ops: SpinOperatorSet,
    d: SparseMatrix,
    d_dag: SparseMatrix,
    general: Option<GeneralTerms>,
}

impl Generator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let eff = spec.eff();
        let ops = build_operators(spec.basis(), eff.u, eff.v)?;
        let d = ops.sparse(Collective::DMinus).clone();
        let d_dag = ops.sparse(Collective::DPlus).clone();
        let general = (spec.form() == MasterEquation::GeneralKernel).then(|| {
            let j = spec.kernel_matrix();
            let sites = ops.site_d_minus();
            let n = sites.len();
            let dim = spec.basis().dim();
            let d_plus: Vec<SparseMatrix> = sites.iter().map(SparseMatrix::adjoint).collect();
            let e: Vec<SparseMatrix> = (0..n)
                .map(|m| {
                    let trip = (0..n).flat_map(|jj| {
                        let c = j[(jj, m)];
                        sites[jj].iter().map(move |(r, col, x)| (r, col, c * x))
                    });
                    SparseMatrix::from_triplets(dim, dim, trip.collect::<Vec<_>>())
                })
                .collect();
            let mut f = SparseMatrix::zeros(dim, dim);
            for m in 0..n {
                f = f.add(&d_plus[m].matmul(&e[m]));
            }
            GeneralTerms { e, d_plus, f }
        });
        Ok(Generator {
            spec: spec.clone(),
            ops,
            d,
            d_dag,
            general,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn ops(&self) -> &SpinOperatorSet {
        &self.ops
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = match &self.general {
            Some(g) => self.apply_general(g, rho),
            None => self.apply_dicke(rho),
        };
        let gd = self.spec.gamma_dephase();
        if gd != 0.0 {
            add_dephasing(gd, rho, &mut out);
        }
        out
    }

    fn apply_dicke(&self, rho: &CMatrix) -> CMatrix {
        let gamma = self.spec.gamma();
        // D⁺D is several times denser than D in the full basis. For Hermitian
        // ρ the RHS is the Hermitian part of DρD⁺ − D⁺(Dρ), which needs only
        // products with D. Taking the Hermitian part also keeps rounding-level
        // anti-Hermitian components from being fed back through the jump term.
        let d_rho = self.d.mul_dense(rho);
        let mut m = self.d_dag.dense_mul(&d_rho);
        m -= self.d_dag.mul_dense(&d_rho);
        let dim = rho.nrows();
        let half = 0.5 * gamma;
        let mut out = CMatrix::zeros(dim, dim);
        for b in 0..dim {
            for a in 0..dim {
                out[(a, b)] = (m[(a, b)] + m[(b, a)].conj()) * half;
            }
        }
        out
    }

    fn apply_general(&self, g: &GeneralTerms, rho: &CMatrix) -> CMatrix {
        let dim = rho.nrows();
        let mut t = CMatrix::zeros(dim, dim);
        for (e, dp) in g.e.iter().zip(&g.d_plus) {
            t += dp.dense_mul(&e.mul_dense(rho));
        }
        t -= g.f.dense_mul(rho);
        let t_dag = t.adjoint();
        t + t_dag
    }
}

/// `Γ_D Σ_j 𝒟[σ_z^j]ρ`: entry (a, b) decays at `2Γ_D` per site where the
/// two bit strings differ.
fn add_dephasing(gamma_d: f64, rho: &CMatrix, out: &mut CMatrix) {
    let dim = rho.nrows();
    for b in 0..dim {
        for a in 0..dim {
            let flips = (a ^ b).count_ones();
            if flips != 0 {
                out[(a, b)] -= rho[(a, b)] * (2.0 * gamma_d * flips as f64);
            }
        }
    }
}

fn check_state(rho: &DensityMatrix, spec: &ModelSpec) -> Result<()> {
    if rho.basis() != spec.basis() {
        return Err(Error::BasisMismatch(format!(
            "state is in {:?} (N = {}), model in {:?} (N = {})",
            rho.basis().kind(),
            rho.basis().n_spins(),
            spec.basis().kind(),
            spec.basis().n_spins()
        )));
    }
    Ok(())
}

/// Evaluates the general position-dependent form.
pub fn rhs_general(rho: &DensityMatrix, spec: &ModelSpec) -> Result<CMatrix> {
    if spec.form() != MasterEquation::GeneralKernel {
        return Err(Error::param("form", "rhs_general needs the general-kernel form"));
    }
    check_state(rho, spec)?;
    Ok(Generator::new(spec)?.apply(rho.data()))
}

/// Evaluates `Γ𝒟[D⁻]ρ (+ Γ_D Σ_j 𝒟[σ_z^j]ρ)`.
pub fn rhs_dicke(rho: &DensityMatrix, spec: &ModelSpec) -> Result<CMatrix> {
    if spec.form() == MasterEquation::GeneralKernel {
        return Err(Error::param("form", "rhs_dicke needs a Dicke form"));
    }
    check_state(rho, spec)?;
    Ok(Generator::new(spec)?.apply(rho.data()))
}

/// Any form.
pub fn rhs(rho: &DensityMatrix, spec: &ModelSpec) -> Result<CMatrix> {
    check_state(rho, spec)?;
    Ok(Generator::new(spec)?.apply(rho.data()))
}

/// `‖M‖_F`.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Analytic dark state of `D⁻` for two spins, `|1,−1⟩ − tanh r |1,1⟩`, in
/// the requested basis.
pub fn two_spin_dark_state(basis: SpinBasis, r: f64) -> Result<DensityMatrix> {
    if basis.n_spins() != 2 {
        return Err(Error::param("n_spins", "the closed-form dark state is for N = 2"));
    }
    let down = crate::spin_algebra::dicke_ket(basis, -2)?;
    let up = crate::spin_algebra::dicke_ket(basis, 2)?;
    let ket = down - up * real(r.tanh());
    DensityMatrix::pure(basis, &ket)
}
