//! One simulation run described in dimensionless units.

use crate::error::{Error, Result};
use crate::lindblad::{
    self, EvolveOptions, MasterEquation, ModelSpec, SteadyOptions, SteadyState, TrajectoryRecord,
};
use crate::siv_model::EffectiveParams;
use crate::spin_algebra::{dicke_state, DensityMatrix, SpinBasis};
use crate::waveguide::{dipole_kernel, EmitterArray};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisChoice {
    Full,
    Dicke,
    /// Dicke sector iff there is no dephasing and the emitters sit on the
    /// λ-lattice; full basis otherwise.
    Auto,
}

impl BasisChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisChoice::Full => "full",
            BasisChoice::Dicke => "dicke",
            BasisChoice::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// `x_n = nλ`, which makes the kernel real and uniform.
    Lattice,
    /// Arbitrary positions; `wavelength` in the same length unit.
    Explicit { positions: Vec<f64>, wavelength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_spins: usize,
    pub r: f64,
    pub gamma_collective: f64,
    /// Γ_D / Γ.
    pub gamma_dephase_ratio: f64,
    /// `2 m_s` of the initial Dicke state; `None` means `N` (all up).
    pub initial_two_m: Option<i64>,
    pub basis: BasisChoice,
    pub placement: Placement,
    /// End time in units of `1/Γ`.
    pub t_end_gamma: f64,
    pub output_points: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_spins: 2,
            r: 0.2,
            gamma_collective: 1.0,
            gamma_dephase_ratio: 0.0,
            initial_two_m: None,
            basis: BasisChoice::Auto,
            placement: Placement::Lattice,
            t_end_gamma: 20.0,
            output_points: 400,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::param("n_spins", "must be at least 1"));
        }
        if !(self.gamma_collective.is_finite() && self.gamma_collective > 0.0) {
            return Err(Error::param("gamma_collective", "must be positive"));
        }
        if !(self.gamma_dephase_ratio.is_finite() && self.gamma_dephase_ratio >= 0.0) {
            return Err(Error::param("gamma_dephase_ratio", "must be non-negative"));
        }
        if !(self.t_end_gamma.is_finite() && self.t_end_gamma > 0.0) {
            return Err(Error::param("t_end_gamma", "must be positive"));
        }
        if self.output_points == 0 {
            return Err(Error::param("output_points", "must be at least 1"));
        }
        if let Placement::Explicit { positions, .. } = &self.placement {
            if positions.len() != self.n_spins {
                return Err(Error::param("positions", format!(
                    "{} positions given for n_spins = {}",
                    positions.len(),
                    self.n_spins
                )));
            }
            if self.gamma_dephase_ratio > 0.0 {
                return Err(Error::param(
                    "gamma_dephase_ratio",
                    "the general-kernel form has no dephasing channel; use lattice placement",
                ));
            }
        }
        Ok(())
    }

    pub fn gamma_dephase(&self) -> f64 {
        self.gamma_dephase_ratio * self.gamma_collective
    }

    pub fn effective_params(&self) -> Result<EffectiveParams> {
        EffectiveParams::from_squeezing(self.r, self.gamma_collective, self.gamma_dephase())
    }

    pub fn resolved_basis(&self) -> Result<SpinBasis> {
        let dicke_ok = self.gamma_dephase_ratio == 0.0 && self.placement == Placement::Lattice;
        match self.basis {
            BasisChoice::Full => SpinBasis::full(self.n_spins),
            BasisChoice::Dicke if !dicke_ok => Err(Error::BasisMismatch(
                "the Dicke sector needs Γ_D = 0 and lattice placement".into(),
            )),
            BasisChoice::Dicke => SpinBasis::dicke_sector(self.n_spins),
            BasisChoice::Auto if dicke_ok => SpinBasis::dicke_sector(self.n_spins),
            BasisChoice::Auto => SpinBasis::full(self.n_spins),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.validate()?;
        let eff = self.effective_params()?;
        let basis = self.resolved_basis()?;
        match &self.placement {
            Placement::Explicit {
                positions,
                wavelength,
            } => {
                let arr = EmitterArray::new(positions.clone(), *wavelength)?;
                let kernel = dipole_kernel(&arr, self.gamma_collective)?;
                ModelSpec::new(basis, eff, Some(kernel), MasterEquation::GeneralKernel)
            }
            Placement::Lattice if self.gamma_dephase_ratio > 0.0 => {
                ModelSpec::new(basis, eff, None, MasterEquation::DickeWithDephasing)
            }
            Placement::Lattice => ModelSpec::new(basis, eff, None, MasterEquation::Dicke),
        }
    }

    pub fn initial_two_m(&self) -> i64 {
        self.initial_two_m.unwrap_or(self.n_spins as i64)
    }

    pub fn initial_state(&self, basis: SpinBasis) -> Result<DensityMatrix> {
        dicke_state(basis, self.initial_two_m())
    }

    /// Output grid in seconds (`Γt / Γ`).
    pub fn output_times(&self) -> Vec<f64> {
        lindblad::output_grid(self.t_end_gamma / self.gamma_collective, self.output_points)
    }

    pub fn evolve(&self, opts: &EvolveOptions) -> Result<TrajectoryRecord> {
        let spec = self.model_spec()?;
        let rho0 = self.initial_state(spec.basis())?;
        let t_end = self.t_end_gamma / self.gamma_collective;
        lindblad::evolve_with(&rho0, &spec, t_end, &self.output_times(), opts)
    }

    pub fn steady(&self, opts: &SteadyOptions) -> Result<SteadyState> {
        let spec = self.model_spec()?;
        let rho0 = self.initial_state(spec.basis())?;
        lindblad::steady_state(&spec, Some(&rho0), opts)
    }
}
