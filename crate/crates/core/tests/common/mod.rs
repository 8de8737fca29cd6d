#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use siv_dicke::linalg::{CMatrix, C64};
use siv_dicke::siv_model::EffectiveParams;
use siv_dicke::spin_algebra::{DensityMatrix, SpinBasis, SpinOperatorSet};

/// `G G† / Tr(G G†)` from `2 d²` uniform reals (full rank almost surely).
pub fn density_from(basis: SpinBasis, raw: &[f64]) -> DensityMatrix {
    let d = basis.dim();
    assert_eq!(raw.len(), 2 * d * d);
    let g = DMatrix::from_fn(d, d, |i, j| C64::new(raw[2 * (i * d + j)], raw[2 * (i * d + j) + 1]));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    let rho = (&rho + rho.adjoint()) * C64::new(0.5 / tr.re, 0.0);
    DensityMatrix::new(basis, rho).expect("valid by construction")
}

pub fn density_strategy(basis: SpinBasis) -> impl Strategy<Value = DensityMatrix> {
    let d = basis.dim();
    prop::collection::vec(-1.0..1.0f64, 2 * d * d).prop_map(move |raw| density_from(basis, &raw))
}

pub fn eff(r: f64, gamma_d: f64) -> EffectiveParams {
    EffectiveParams::from_squeezing(r, 1.0, gamma_d).unwrap()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `(1 + tanh r)² / (1 + tanh² r)`: inverse witness of the two-spin dark state.
pub fn dark_inv_xi_r2(r: f64) -> f64 {
    let t = r.tanh();
    (1.0 + t) * (1.0 + t) / (1.0 + t * t)
}

/// Kitagawa–Ueda parameter by brute force: dense operator products for the
/// covariance, then the minimum variance of `n·S` over `n` on a uniform grid
/// of `points` angles in the plane normal to the mean spin.
pub fn xi_s2_grid_oracle(rho: &DensityMatrix, ops: &SpinOperatorSet, points: usize) -> f64 {
    let s = [ops.s_x(), ops.s_y(), ops.s_z()];
    let r = rho.data();
    let ev = |m: &CMatrix| (r * m).trace().re;
    let mean: Vec<f64> = s.iter().map(|m| ev(m)).collect();
    let mut cov = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let sym = (s[a] * s[b] + s[b] * s[a]) * C64::new(0.5, 0.0);
            cov[a][b] = ev(&sym) - mean[a] * mean[b];
        }
    }
    let len = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0: Vec<f64> = mean.iter().map(|x| x / len).collect();
    // Gram–Schmidt from whichever axis is least aligned with the mean spin.
    let pick = (0..3)
        .min_by(|&i, &j| n0[i].abs().total_cmp(&n0[j].abs()))
        .unwrap();
    let mut e1 = [0.0; 3];
    e1[pick] = 1.0;
    let dot: f64 = (0..3).map(|i| e1[i] * n0[i]).sum();
    for i in 0..3 {
        e1[i] -= dot * n0[i];
    }
    let l1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|x| *x /= l1);
    let e2 = [
        n0[1] * e1[2] - n0[2] * e1[1],
        n0[2] * e1[0] - n0[0] * e1[2],
        n0[0] * e1[1] - n0[1] * e1[0],
    ];
    let mut best = f64::INFINITY;
    for k in 0..points {
        let a = std::f64::consts::PI * k as f64 / points as f64;
        let n: Vec<f64> = (0..3).map(|i| a.cos() * e1[i] + a.sin() * e2[i]).collect();
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += n[i] * cov[i][j] * n[j];
            }
        }
        best = best.min(var);
    }
    4.0 * best / ops.basis().n_spins() as f64
}

/// Symmetric-sector state `|N/2, m⟩` lifted into the full basis by explicit
/// symmetrization over bit strings (independent of the library's isometry).
pub fn symmetric_ket_by_hand(n: usize, n_down: usize) -> nalgebra::DVector<C64> {
    let dim = 1usize << n;
    let count = (0..dim).filter(|a: &usize| a.count_ones() as usize == n_down).count() as f64;
    nalgebra::DVector::from_fn(dim, |a, _| {
        if a.count_ones() as usize == n_down {
            C64::new(1.0 / count.sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Brute force: Hermitian 4×4 embedded as a real symmetric 8×8, every
/// eigenvalue appearing twice.
pub fn dense_eigenvalues(h: &nalgebra::Matrix4<C64>) -> Vec<f64> {
    let m = nalgebra::DMatrix::<f64>::from_fn(8, 8, |i, j| {
        let z = h[(i % 4, j % 4)];
        match (i < 4, j < 4) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}
