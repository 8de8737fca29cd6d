//! Ground-state manifold of a single negatively charged silicon-vacancy
//! center and the Raman parameter algebra that produces the squeezed jump
//! operator.
//!
//! All frequencies are angular (rad/s). The 4×4 Hamiltonian uses the basis
//! ordering `(e_x↑, e_x↓, e_y↑, e_y↓)`; the reduced orbital Zeeman term is not
//! included.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{real, C64, I, ZERO};

/// Spin-orbit coupling λ_g/2π = 45 GHz.
pub const LAMBDA_G: f64 = 2.0 * PI * 45.0e9;
/// Quoted ground-state splitting Δ/2π ≈ 46 GHz.
pub const GROUND_SPLITTING: f64 = 2.0 * PI * 46.0e9;
/// Electron-spin gyromagnetic ratio γ_S/2π ≈ 28 GHz/T.
pub const GAMMA_S: f64 = 2.0 * PI * 28.0e9;
/// Orbital gyromagnetic ratio γ_L/2π ≈ 14 GHz/T (Bohr magneton / h).
pub const GAMMA_L: f64 = 2.0 * PI * 14.0e9;
/// Jahn-Teller quenching factor.
pub const F_QUENCH: f64 = 0.1;
/// Spin coherence time at 100 mK.
pub const T2_100MK: f64 = 10.0e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SivPhysicalParams {
    pub lambda_g: f64,
    pub upsilon_x: f64,
    pub upsilon_y: f64,
    /// Magnetic field along the symmetry axis (T).
    pub b0: f64,
    pub gamma_s: f64,
    pub f_quench: f64,
    pub gamma_l: f64,
}

impl SivPhysicalParams {
    pub fn new(
        lambda_g: f64,
        upsilon_x: f64,
        upsilon_y: f64,
        b0: f64,
        gamma_s: f64,
        f_quench: f64,
        gamma_l: f64,
    ) -> Result<Self> {
        let p = SivPhysicalParams {
            lambda_g,
            upsilon_x,
            upsilon_y,
            b0,
            gamma_s,
            f_quench,
            gamma_l,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero field, with the Jahn-Teller strength chosen (along x) so the
    /// splitting equals the quoted 2π × 46 GHz.
    pub fn reference() -> Self {
        let upsilon = 0.5 * (GROUND_SPLITTING.powi(2) - LAMBDA_G.powi(2)).sqrt();
        SivPhysicalParams {
            lambda_g: LAMBDA_G,
            upsilon_x: upsilon,
            upsilon_y: 0.0,
            b0: 0.0,
            gamma_s: GAMMA_S,
            f_quench: F_QUENCH,
            gamma_l: GAMMA_L,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lambda_g,
            self.upsilon_x,
            self.upsilon_y,
            self.b0,
            self.gamma_s,
            self.f_quench,
            self.gamma_l,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::param("siv", "all parameters must be finite"));
        }
        if self.lambda_g <= 0.0 {
            return Err(Error::param("lambda_g", "must be positive"));
        }
        if self.gamma_s <= 0.0 {
            return Err(Error::param("gamma_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.f_quench) {
            return Err(Error::param("f_quench", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Jahn-Teller strength Υ = √(Υ_x² + Υ_y²).
    pub fn upsilon(&self) -> f64 {
        self.upsilon_x.hypot(self.upsilon_y)
    }

    /// Zeeman energy ω_B = γ_S B_0.
    pub fn zeeman(&self) -> f64 {
        self.gamma_s * self.b0
    }
}

/// The 4×4 single-center Hamiltonian in the `(e_x↑, e_x↓, e_y↑, e_y↓)` basis.
pub fn build_siv_hamiltonian(p: &SivPhysicalParams) -> Matrix4<C64> {
    let hz = 0.5 * p.zeeman();
    let so = 0.5 * p.lambda_g;
    let (ux, uy) = (p.upsilon_x, p.upsilon_y);
    Matrix4::new(
        real(hz + ux),
        ZERO,
        -I * so + uy,
        ZERO,
        //
        ZERO,
        real(-hz + ux),
        ZERO,
        I * so + uy,
        //
        I * so + uy,
        ZERO,
        real(hz - ux),
        ZERO,
        //
        ZERO,
        -I * so + uy,
        ZERO,
        real(-hz - ux),
    )
}

/// Δ = √(λ_g² + 4(Υ_x² + Υ_y²)).
pub fn ground_splitting(p: &SivPhysicalParams) -> f64 {
    (p.lambda_g.powi(2) + 4.0 * (p.upsilon_x.powi(2) + p.upsilon_y.powi(2))).sqrt()
}

/// Closed-form level energies labelled as |1⟩…|4⟩ (spin-↓ lower, spin-↑
/// lower, spin-↓ upper, spin-↑ upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEnergies {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl LevelEnergies {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }

    /// Same levels with the zero of energy moved to `E_1`.
    pub fn relative_to_ground(&self) -> Self {
        LevelEnergies {
            e1: 0.0,
            e2: self.e2 - self.e1,
            e3: self.e3 - self.e1,
            e4: self.e4 - self.e1,
        }
    }
}

pub fn level_energies(p: &SivPhysicalParams) -> LevelEnergies {
    let root = (p.upsilon().powi(2) + 0.25 * p.lambda_g.powi(2)).sqrt();
    let hz = 0.5 * p.zeeman();
    LevelEnergies {
        e1: -hz - root,
        e2: hz - root,
        e3: -hz + root,
        e4: hz + root,
    }
}

/// Labelled eigenstates of the single-center Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SivEigensystem {
    /// Energies of |1⟩…|4⟩, absolute (not shifted).
    pub energies: [f64; 4],
    /// Column `k` is the eigenvector of level `k+1` in the
    /// `(e_x↑, e_x↓, e_y↑, e_y↓)` basis.
    pub states: Matrix4<C64>,
}

impl SivEigensystem {
    /// `|⟨e_±,σ|k⟩|²` for every level `k`; columns ordered
    /// `(e₊↑, e₋↑, e₊↓, e₋↓)`.
    pub fn orbital_overlaps(&self) -> [[f64; 4]; 4] {
        let refs = orbital_reference_states();
        let mut out = [[0.0; 4]; 4];
        for (k, row) in out.iter_mut().enumerate() {
            let state = self.states.column(k);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = refs[j].dotc(&state).norm_sqr();
            }
        }
        out
    }
}

/// `|e_±,σ⟩ = (|e_x,σ⟩ ± i|e_y,σ⟩)/√2`, ordered `(e₊↑, e₋↑, e₊↓, e₋↓)`.
pub fn orbital_reference_states() -> [Vector4<C64>; 4] {
    let h = real(std::f64::consts::FRAC_1_SQRT_2);
    let ih = I * std::f64::consts::FRAC_1_SQRT_2;
    [
        Vector4::new(h, ZERO, ih, ZERO),
        Vector4::new(h, ZERO, -ih, ZERO),
        Vector4::new(ZERO, h, ZERO, ih),
        Vector4::new(ZERO, h, ZERO, -ih),
    ]
}

/// Diagonalizes the Hamiltonian sector by sector. The spin projection is
/// conserved, so each spin block is a 2×2 Hermitian problem; this keeps the
/// labels well defined when levels cross or are degenerate.
pub fn eigensystem(p: &SivPhysicalParams) -> SivEigensystem {
    let h = build_siv_hamiltonian(p);
    let mut energies = [0.0; 4];
    let mut states = Matrix4::<C64>::zeros();
    // (basis indices of the block, label index of lower level, upper level)
    for (idx, lower, upper) in [([1usize, 3usize], 0usize, 2usize), ([0, 2], 1, 3)] {
        let block = Matrix2::new(
            h[(idx[0], idx[0])],
            h[(idx[0], idx[1])],
            h[(idx[1], idx[0])],
            h[(idx[1], idx[1])],
        );
        let eig = SymmetricEigen::new(block);
        let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        for (col, label) in [(lo, lower), (hi, upper)] {
            energies[label] = eig.eigenvalues[col];
            for (row, &basis_idx) in idx.iter().enumerate() {
                states[(basis_idx, label)] = eig.eigenvectors[(row, col)];
            }
        }
    }
    SivEigensystem { energies, states }
}

/// Two Raman drives: |1⟩↔|4⟩ with (Ω₁, Δ₁) and |2⟩↔|3⟩ with (Ω₂, Δ₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    /// Emitted phonon frequency ω_a; an independent input.
    pub omega_a: f64,
}

/// Ω/|Δ| above this is flagged as marginal for adiabatic elimination.
pub const ADIABATIC_WARN_RATIO: f64 = 0.1;
/// Ω/|Δ| above this is outside the adiabatic regime.
pub const ADIABATIC_MAX_RATIO: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adiabaticity {
    Valid,
    Marginal { worst_ratio: f64 },
    Violated { worst_ratio: f64 },
}

impl DriveParams {
    pub fn new(omega_1: f64, omega_2: f64, delta_1: f64, delta_2: f64, omega_a: f64) -> Result<Self> {
        let d = DriveParams {
            omega_1,
            omega_2,
            delta_1,
            delta_2,
            omega_a,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_1.is_finite() && self.omega_1 >= 0.0) {
            return Err(Error::param("omega_1", "must be finite and non-negative"));
        }
        if !(self.omega_2.is_finite() && self.omega_2 >= 0.0) {
            return Err(Error::param("omega_2", "must be finite and non-negative"));
        }
        if !(self.delta_1.is_finite() && self.delta_1 != 0.0) {
            return Err(Error::param("delta_1", "must be finite and nonzero"));
        }
        if !(self.delta_2.is_finite() && self.delta_2 != 0.0) {
            return Err(Error::param("delta_2", "must be finite and nonzero"));
        }
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return Err(Error::param("omega_a", "must be finite and positive"));
        }
        Ok(())
    }

    /// Ω₁/2Δ₁.
    pub fn ratio_1(&self) -> f64 {
        self.omega_1 / (2.0 * self.delta_1)
    }

    /// Ω₂/2Δ₂.
    pub fn ratio_2(&self) -> f64 {
        self.omega_2 / (2.0 * self.delta_2)
    }

    pub fn adiabaticity(&self) -> Adiabaticity {
        let worst = (self.omega_1 / self.delta_1.abs()).max(self.omega_2 / self.delta_2.abs());
        if worst > ADIABATIC_MAX_RATIO {
            Adiabaticity::Violated { worst_ratio: worst }
        } else if worst > ADIABATIC_WARN_RATIO {
            Adiabaticity::Marginal { worst_ratio: worst }
        } else {
            Adiabaticity::Valid
        }
    }
}

/// Parameters of the dissipative spin model: `D⁻ = u S⁻ + v S⁺` with
/// `u = cosh r`, `v = sinh r`, collective rate Γ and single-spin dephasing Γ_D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    /// Normalization α; `None` when the model was specified through `r`
    /// directly rather than derived from drives.
    pub alpha: Option<f64>,
    pub gamma_collective: f64,
    pub gamma_dephase: f64,
}

impl EffectiveParams {
    pub fn from_squeezing(r: f64, gamma_collective: f64, gamma_dephase: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::param("r", "must be finite and non-negative"));
        }
        let eff = EffectiveParams {
            u: r.cosh(),
            v: r.sinh(),
            r,
            alpha: None,
            gamma_collective,
            gamma_dephase,
        };
        eff.validate()?;
        Ok(eff)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_collective.is_finite() && self.gamma_collective >= 0.0) {
            return Err(Error::param("gamma_collective", "must be finite and non-negative"));
        }
        if !(self.gamma_dephase.is_finite() && self.gamma_dephase >= 0.0) {
            return Err(Error::param("gamma_dephase", "must be finite and non-negative"));
        }
        if self.u < 1.0 || self.v < 0.0 {
            return Err(Error::param("u, v", "require u ≥ 1 and v ≥ 0"));
        }
        let defect = (self.u * self.u - self.v * self.v - 1.0).abs();
        if defect > 1e-12 * self.u * self.u {
            return Err(Error::param("u, v", format!("u² − v² − 1 = {defect:e}")));
        }
        Ok(())
    }

    pub fn tanh_r(&self) -> f64 {
        self.v / self.u
    }
}

/// Maps the drive configuration onto `{u, v, α, r, Γ, Γ_D}`.
///
/// `α² = (Ω₂/2Δ₂)² − (Ω₁/2Δ₁)²`, which is the sign that makes `u² − v² = 1`
/// hold for `u = α⁻¹Ω₂/2Δ₂`, `v = α⁻¹Ω₁/2Δ₁`. Γ = α²γ(ω_a) and
/// Γ_D = 1/(2T₂).
pub fn effective_params(d: &DriveParams, gamma_at_omega_a: f64, t2: Option<f64>) -> Result<EffectiveParams> {
    d.validate()?;
    if !(gamma_at_omega_a.is_finite() && gamma_at_omega_a > 0.0) {
        return Err(Error::param("gamma_at_omega_a", "must be finite and positive"));
    }
    let x1 = d.ratio_1();
    let x2 = d.ratio_2();
    let dominant = x2 * x2;
    let minor = x1 * x1;
    let alpha2 = dominant - minor;
    if !(alpha2 > 0.0) {
        return Err(Error::DegenerateDrive { dominant, minor });
    }
    let alpha = alpha2.sqrt();
    // The overall sign of the jump operator is physically irrelevant, so the
    // detuning signs only enter through |x|.
    let u = x2.abs() / alpha;
    let v = x1.abs() / alpha;
    let gamma_dephase = match t2 {
        Some(t2) if t2.is_finite() && t2 > 0.0 => 1.0 / (2.0 * t2),
        Some(_) => return Err(Error::param("t2", "must be finite and positive")),
        None => 0.0,
    };
    Ok(EffectiveParams {
        u,
        v,
        r: (v / u).atanh(),
        alpha: Some(alpha),
        gamma_collective: alpha2 * gamma_at_omega_a,
        gamma_dephase,
    })
}
