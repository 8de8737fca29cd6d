//! Phonon continuum of a quasi-one-dimensional diamond waveguide under a
//! linear dispersion `ω = v k`, and the emitter-emitter kernel it mediates.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{real, C64};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Device and material constants of the reference feasibility estimate.
pub mod reference {
    use std::f64::consts::PI;

    pub const LENGTH: f64 = 100.0e-6;
    pub const WIDTH: f64 = 100.0e-9;
    pub const THICKNESS: f64 = 100.0e-9;
    pub const DENSITY: f64 = 3500.0;
    /// Young's modulus of diamond (Pa).
    pub const YOUNG_MODULUS: f64 = 1050.0e9;
    pub const POISSON_RATIO: f64 = 0.2;
    pub const GROUP_VELOCITY: f64 = 1.71e4;
    /// Strain sensitivity d/2π ∼ 1 PHz.
    pub const STRAIN_SENSITIVITY: f64 = 2.0 * PI * 1.0e15;
    /// Quoted single-center coupling g/2π = 16 MHz.
    pub const QUOTED_COUPLING: f64 = 2.0 * PI * 16.0e6;
    /// Quoted collective rate Γ/2π = 160 kHz.
    pub const QUOTED_COLLECTIVE_RATE: f64 = 2.0 * PI * 160.0e3;
    /// Quoted phonon wavelength used for emitter placement.
    pub const QUOTED_WAVELENGTH: f64 = 200.0e-9;
    /// Quoted drive amplitude and detuning scales, Ω/2π ∼ 10 MHz, Δ/2π ∼ 100 MHz.
    pub const QUOTED_DRIVE_AMPLITUDE: f64 = 2.0 * PI * 10.0e6;
    pub const QUOTED_DRIVE_DETUNING: f64 = 2.0 * PI * 100.0e6;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideParams {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub density: f64,
    pub group_velocity: f64,
    /// Strain sensitivity d (rad/s).
    pub strain_sensitivity: f64,
    /// Transverse strain profile ξ_{n,k}(y,z) at the emitter.
    pub transverse_factor: f64,
}

impl Default for WaveguideParams {
    fn default() -> Self {
        WaveguideParams {
            length: reference::LENGTH,
            width: reference::WIDTH,
            thickness: reference::THICKNESS,
            density: reference::DENSITY,
            group_velocity: reference::GROUP_VELOCITY,
            strain_sensitivity: reference::STRAIN_SENSITIVITY,
            transverse_factor: 1.0,
        }
    }
}

impl WaveguideParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("density", self.density),
            ("group_velocity", self.group_velocity),
            ("strain_sensitivity", self.strain_sensitivity),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, "must be finite and positive"));
            }
        }
        if !self.transverse_factor.is_finite() {
            return Err(Error::param("transverse_factor", "must be finite"));
        }
        if self.length <= self.width * self.thickness {
            log::warn!("waveguide is not quasi one-dimensional (L ≤ w·t)");
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.thickness
    }

    /// k = ω / v.
    pub fn wavevector(&self, omega: f64) -> f64 {
        omega / self.group_velocity
    }

    /// λ = 2π v / ω.
    pub fn wavelength(&self, omega: f64) -> f64 {
        2.0 * PI * self.group_velocity / omega
    }
}

/// ω = v k.
pub fn mode_frequency(k: f64, wp: &WaveguideParams) -> f64 {
    wp.group_velocity * k
}

/// One-dimensional density of states `(L/2π)/|∂ω/∂k|` for a single
/// propagation direction; frequency independent under linear dispersion.
pub fn density_of_states(_omega: f64, wp: &WaveguideParams) -> f64 {
    wp.length / (2.0 * PI) / wp.group_velocity
}

/// Strain coupling `g = d √(ħk² / (2ρVω)) ξ` with `ω = vk`.
pub fn coupling_strength(k: f64, wp: &WaveguideParams) -> f64 {
    let omega = mode_frequency(k, wp);
    if omega == 0.0 {
        return 0.0;
    }
    wp.strain_sensitivity * (HBAR * k * k / (2.0 * wp.density * wp.volume() * omega)).sqrt() * wp.transverse_factor
}

/// Single-emitter emission rate `γ = |g|² D / π`.
pub fn emission_rate(g: f64, dos: f64) -> f64 {
    g * g * dos / PI
}

/// Emitter coordinates along the waveguide together with the resonant
/// phonon wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    positions: Vec<f64>,
    wavelength: f64,
}

impl EmitterArray {
    pub fn new(positions: Vec<f64>, wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::param("wavelength", "must be finite and positive"));
        }
        if positions.is_empty() {
            return Err(Error::param("positions", "at least one emitter is required"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("positions", "must be finite"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("positions", "must be strictly increasing"));
        }
        Ok(EmitterArray { positions, wavelength })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// k_a = 2π / λ.
    pub fn k_a(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// x_j = j λ for j = 0 … N−1.
pub fn place_on_lattice(n_emitters: usize, wavelength: f64) -> Result<EmitterArray> {
    if n_emitters == 0 {
        return Err(Error::param("n_emitters", "must be at least 1"));
    }
    EmitterArray::new((0..n_emitters).map(|j| j as f64 * wavelength).collect(), wavelength)
}

/// `J_{j,m} = (Γ/2) exp(i k_a |x_j − x_m|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleKernel {
    matrix: DMatrix<C64>,
    gamma_collective: f64,
}

impl DipoleKernel {
    /// The all-equal kernel Γ/2 of perfectly constructive placement.
    pub fn ideal(n: usize, gamma_collective: f64) -> Self {
        DipoleKernel {
            matrix: DMatrix::from_element(n, n, real(0.5 * gamma_collective)),
            gamma_collective,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn gamma_collective(&self) -> f64 {
        self.gamma_collective
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn max_imag(&self) -> f64 {
        self.matrix.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }

    /// True when the coherent part vanishes, so the general master equation
    /// collapses onto the collective Dicke form.
    pub fn is_dicke_reducible(&self) -> bool {
        self.max_imag() < 1e-12 * self.gamma_collective
    }

    /// Real (dissipative) part of the kernel.
    pub fn decay_part(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }
}

pub fn dipole_kernel(arr: &EmitterArray, gamma_collective: f64) -> Result<DipoleKernel> {
    if !(gamma_collective.is_finite() && gamma_collective > 0.0) {
        return Err(Error::param("gamma_collective", "must be finite and positive"));
    }
    let n = arr.len();
    let x = arr.positions();
    let lambda = arr.wavelength();
    let matrix = DMatrix::from_fn(n, n, |j, m| {
        // Reduce the separation modulo λ before forming the phase so that
        // lattice placements give exact multiples of 2π.
        let cycles = (x[j] - x[m]).abs() / lambda;
        let cycles = cycles - cycles.round();
        let (s, c) = (2.0 * PI * cycles).sin_cos();
        C64::new(c, s) * (0.5 * gamma_collective)
    });
    Ok(DipoleKernel {
        matrix,
        gamma_collective,
    })
}
