//! Explicit superoperator in the column-stacking convention,
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//!
//! Assembled from Kronecker products of the operators directly, not by
//! probing the matrix-free RHS, so the two serve as checks on each other.

use super::{MasterEquation, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::{real, CMatrix, SparseMatrix, ONE};
use crate::spin_algebra::{build_operators, Collective};

/// Largest `dim` for which the `dim² × dim²` matrix is built.
pub const MAX_LIOUVILLIAN_DIM: usize = 128;

pub fn liouvillian_matrix(spec: &ModelSpec) -> Result<CMatrix> {
    let dim = spec.basis().dim();
    if dim > MAX_LIOUVILLIAN_DIM {
        return Err(Error::DimensionGuard {
            what: "Liouvillian state dimension",
            limit: MAX_LIOUVILLIAN_DIM,
            requested: dim,
        });
    }
    let eff = spec.eff();
    let ops = build_operators(spec.basis(), eff.u, eff.v)?;
    let id = SparseMatrix::identity(dim);
    let mut l = CMatrix::zeros(dim * dim, dim * dim);

    match spec.form() {
        MasterEquation::GeneralKernel => {
            let j = spec.kernel_matrix();
            let sites = ops.site_d_minus();
            let n = sites.len();
            let mut f = SparseMatrix::zeros(dim, dim);
            for m in 0..n {
                let mut e = SparseMatrix::zeros(dim, dim);
                for (jj, site) in sites.iter().enumerate() {
                    e = e.add(&site.scale(j[(jj, m)]));
                }
                let dm = &sites[m];
                // E_m X D_m⁺  and its mirror D_m X E_m⁺
                dm.conj().kron_accumulate(&e, ONE, &mut l);
                e.conj().kron_accumulate(dm, ONE, &mut l);
                f = f.add(&dm.adjoint().matmul(&e));
            }
            // − X F − F⁺ X
            f.transpose().kron_accumulate(&id, -ONE, &mut l);
            id.kron_accumulate(&f.adjoint(), -ONE, &mut l);
        }
        MasterEquation::Dicke | MasterEquation::DickeWithDephasing => {
            let g = real(spec.gamma());
            let d = ops.sparse(Collective::DMinus);
            let k = ops.sparse(Collective::DPlus).matmul(d);
            d.conj().kron_accumulate(d, g, &mut l);
            id.kron_accumulate(&k, -g * 0.5, &mut l);
            k.transpose().kron_accumulate(&id, -g * 0.5, &mut l);
        }
    }

    let gd = spec.gamma_dephase();
    if gd != 0.0 {
        for sz in ops.site_sigma_z() {
            sz.kron_accumulate(sz, real(gd), &mut l);
            id.kron_accumulate(&id, real(-gd), &mut l);
        }
    }
    Ok(l)
}
