//! Spin-squeezing witnesses.
//!
//! `ξ_R'² = N (ΔS_x)² / (⟨S_y⟩² + ⟨S_z⟩²)` uses the fixed x axis and is the
//! quantity plotted against Γt; `ξ_S²` is the Kitagawa–Ueda parameter, the
//! smallest variance in the plane normal to the mean spin, relative to `N/4`.

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::spin_algebra::{Collective, DensityMatrix, SpinOperatorSet, EXPECTATION_IMAG_TOL};

/// Denominator floor for `ξ_R'²`.
pub const MEAN_SPIN_FLOOR: f64 = 1e-12;
/// Below this length the mean-spin direction is treated as undefined.
pub const DEGENERATE_SPIN_LENGTH: f64 = 1e-12;

/// First and symmetrized second moments of `(S_x, S_y, S_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub mean: [f64; 3],
    /// `½⟨S_a S_b + S_b S_a⟩`.
    pub second: [[f64; 3]; 3],
}

impl SpinMoments {
    pub fn variance(&self, axis: usize) -> f64 {
        self.second[axis][axis] - self.mean[axis] * self.mean[axis]
    }

    /// `⟨S²⟩`.
    pub fn total_spin_squared(&self) -> f64 {
        self.second[0][0] + self.second[1][1] + self.second[2][2]
    }

    /// `nᵀ M n'` for the second-moment matrix `M`.
    fn quadratic(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += a[i] * self.second[i][j] * b[j];
            }
        }
        acc
    }
}

/// `Tr(A X)` for sparse `A` and dense `X`.
fn sparse_trace(a: &crate::linalg::SparseMatrix, x: &crate::linalg::CMatrix) -> C64 {
    a.iter().fold(ZERO, |acc, (r, c, v)| acc + v * x[(c, r)])
}

fn checked_real(z: C64) -> Result<f64> {
    if z.im.abs() > EXPECTATION_IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::ComplexExpectation { real: z.re, imag: z.im });
    }
    Ok(z.re)
}

/// Evaluates the moments through the sparse operators, `O(nnz · dim)`.
pub fn spin_moments(rho: &DensityMatrix, ops: &SpinOperatorSet) -> Result<SpinMoments> {
    if rho.basis() != ops.basis() {
        return Err(Error::BasisMismatch("state and operators use different bases".into()));
    }
    let axes = [Collective::Sx, Collective::Sy, Collective::Sz];
    let mut mean = [0.0; 3];
    let mut raw = [[ZERO; 3]; 3];
    for (b, &op_b) in axes.iter().enumerate() {
        let sb = ops.sparse(op_b);
        mean[b] = checked_real(sparse_trace(sb, rho.data()))?;
        let x = sb.mul_dense(rho.data());
        for (a, &op_a) in axes.iter().enumerate() {
            raw[a][b] = sparse_trace(ops.sparse(op_a), &x);
        }
    }
    let mut second = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            second[a][b] = checked_real((raw[a][b] + raw[b][a]) * 0.5)?;
        }
    }
    Ok(SpinMoments { mean, second })
}

fn xi_r_from(m: &SpinMoments, n: usize) -> Result<f64> {
    let denom = m.mean[1] * m.mean[1] + m.mean[2] * m.mean[2];
    if !(denom > MEAN_SPIN_FLOOR) {
        return Err(Error::DegenerateMeanSpin { denominator: denom });
    }
    Ok(n as f64 * m.variance(0) / denom)
}

/// Mean-spin polar angles and the Kitagawa–Ueda parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct KitagawaUeda {
    xi_s2: f64,
    theta: f64,
    phi: f64,
    degenerate: bool,
}

fn kitagawa_ueda(m: &SpinMoments, n: usize) -> KitagawaUeda {
    let [sx, sy, sz] = m.mean;
    let len = (sx * sx + sy * sy + sz * sz).sqrt();
    let degenerate = len <= DEGENERATE_SPIN_LENGTH;
    let theta = if degenerate { 0.0 } else { (sz / len).clamp(-1.0, 1.0).acos() };
    let phi = if (sx * sx + sy * sy).sqrt() <= DEGENERATE_SPIN_LENGTH {
        0.0
    } else {
        sy.atan2(sx)
    };
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    // S_1 = S_y cos φ − S_x sin φ, S_2 = S_x cos θ cos φ + S_y cos θ sin φ − S_z sin θ
    let n1 = [-sp, cp, 0.0];
    let n2 = [ct * cp, ct * sp, -st];
    let a = m.quadratic(&n1, &n1);
    let b = m.quadratic(&n2, &n2);
    let c = 2.0 * m.quadratic(&n1, &n2);
    let xi_s2 = 2.0 / n as f64 * (a + b - ((a - b) * (a - b) + c * c).sqrt());
    KitagawaUeda {
        xi_s2,
        theta,
        phi,
        degenerate,
    }
}

pub fn xi_r_squared(rho: &DensityMatrix, ops: &SpinOperatorSet) -> Result<f64> {
    let m = spin_moments(rho, ops)?;
    xi_r_from(&m, ops.basis().n_spins())
}

pub fn xi_s_squared(rho: &DensityMatrix, ops: &SpinOperatorSet) -> Result<f64> {
    let m = spin_moments(rho, ops)?;
    Ok(kitagawa_ueda(&m, ops.basis().n_spins()).xi_s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingReport {
    /// `None` when the mean spin has no y-z component.
    pub xi_r2: Option<f64>,
    pub xi_s2: f64,
    pub inv_xi_r2: Option<f64>,
    pub inv_xi_s2: f64,
    pub theta: f64,
    pub phi: f64,
    pub mean_spin: [f64; 3],
    pub degenerate_angles: bool,
    pub degenerate_mean_spin: bool,
}

impl SqueezingReport {
    pub fn from_moments(m: &SpinMoments, n_spins: usize) -> Self {
        let xi_r2 = xi_r_from(m, n_spins).ok();
        let ku = kitagawa_ueda(m, n_spins);
        SqueezingReport {
            xi_r2,
            xi_s2: ku.xi_s2,
            inv_xi_r2: xi_r2.map(|x| 1.0 / x),
            inv_xi_s2: 1.0 / ku.xi_s2,
            theta: ku.theta,
            phi: ku.phi,
            mean_spin: m.mean,
            degenerate_angles: ku.degenerate,
            degenerate_mean_spin: xi_r2.is_none(),
        }
    }

    /// `ξ_R'² < 1`.
    pub fn entangled(&self) -> bool {
        matches!(self.xi_r2, Some(x) if x < 1.0)
    }
}

pub fn report(rho: &DensityMatrix, ops: &SpinOperatorSet) -> Result<SqueezingReport> {
    let m = spin_moments(rho, ops)?;
    Ok(SqueezingReport::from_moments(&m, ops.basis().n_spins()))
}
