//! Collective spin operators and density matrices for an N-spin register.
//!
//! Each center is a qubit with |2⟩ (upper ground state) as spin up and |1⟩ as
//! spin down. Two representations are supported:
//!
//! - `Full`: the `2^N` product space, big-endian over sites (site 0 is the
//!   most significant bit), bit value 0 = up. Index 0 is therefore the
//!   all-up state.
//! - `DickeSector`: the `N+1` dimensional maximal-spin sector `S = N/2`,
//!   index `k` holding `|S, m = S − k⟩`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMatrix, SparseMatrix, C64, I, ONE, ZERO};

pub const MAX_FULL_SPINS: usize = 12;
pub const MAX_DICKE_SPINS: usize = 10_000;

/// Acceptance tolerances for a physical density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Largest imaginary residual tolerated on an expectation of a Hermitian
/// operator.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Full,
    DickeSector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    kind: BasisKind,
    n_spins: usize,
    dim: usize,
}

impl SpinBasis {
    pub fn new(kind: BasisKind, n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::param("n_spins", "must be at least 1"));
        }
        let (limit, dim) = match kind {
            BasisKind::Full => (MAX_FULL_SPINS, 1usize.checked_shl(n_spins as u32).unwrap_or(0)),
            BasisKind::DickeSector => (MAX_DICKE_SPINS, n_spins + 1),
        };
        if n_spins > limit {
            return Err(Error::DimensionGuard {
                what: match kind {
                    BasisKind::Full => "full-basis spin count",
                    BasisKind::DickeSector => "Dicke-sector spin count",
                },
                limit,
                requested: n_spins,
            });
        }
        Ok(SpinBasis { kind, n_spins, dim })
    }

    pub fn full(n_spins: usize) -> Result<Self> {
        Self::new(BasisKind::Full, n_spins)
    }

    pub fn dicke_sector(n_spins: usize) -> Result<Self> {
        Self::new(BasisKind::DickeSector, n_spins)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_full(&self) -> bool {
        self.kind == BasisKind::Full
    }

    /// Total spin quantum number S = N/2 of the symmetric sector.
    pub fn max_spin(&self) -> f64 {
        0.5 * self.n_spins as f64
    }
}

type Qubit = [[C64; 2]; 2];

const SIGMA_Z: Qubit = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];
/// σ₊ = |2⟩⟨1|: raises down (index 1) to up (index 0).
const SIGMA_PLUS: Qubit = [[ZERO, ONE], [ZERO, ZERO]];
const SIGMA_MINUS: Qubit = [[ZERO, ZERO], [ONE, ZERO]];

fn site_shift(site: usize, n: usize) -> usize {
    n - 1 - site
}

/// Embeds a single-qubit operator acting on `site` into the `2^n` space,
/// i.e. `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn lift_site(op: &[[C64; 2]; 2], site: usize, n: usize) -> SparseMatrix {
    assert!(site < n);
    let dim = 1usize << n;
    let shift = site_shift(site, n);
    let mask = 1usize << shift;
    let mut triplets = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        let bit = (a >> shift) & 1;
        for (out_bit, row) in op.iter().enumerate() {
            let val = row[bit];
            if val != ZERO {
                triplets.push(((a & !mask) | (out_bit << shift), a, val));
            }
        }
    }
    SparseMatrix::from_triplets(dim, dim, triplets)
}

/// Names of the collective operators held by [`SpinOperatorSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Collective {
    Sx,
    Sy,
    Sz,
    SPlus,
    SMinus,
    DPlus,
    DMinus,
}

impl Collective {
    pub const ALL: [Collective; 7] = [
        Collective::Sx,
        Collective::Sy,
        Collective::Sz,
        Collective::SPlus,
        Collective::SMinus,
        Collective::DPlus,
        Collective::DMinus,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Collective operators, plus per-site σ_z^j and D_j⁻ (full basis only).
///
/// Everything is assembled in compressed-row form; the dense matrix of a
/// collective operator is materialized on first access and cached. At N = 12
/// seven dense 4096² operators would take close to 2 GB, while the RHS and
/// moment evaluations only ever need the sparse form.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    basis: SpinBasis,
    u: f64,
    v: f64,
    sparse: [SparseMatrix; 7],
    dense: [OnceLock<CMatrix>; 7],
    site_sigma_z: Vec<SparseMatrix>,
    site_d_minus: Vec<SparseMatrix>,
}

impl SpinOperatorSet {
    pub fn basis(&self) -> SpinBasis {
        self.basis
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn sparse(&self, op: Collective) -> &SparseMatrix {
        &self.sparse[op.index()]
    }

    pub fn dense(&self, op: Collective) -> &CMatrix {
        let i = op.index();
        self.dense[i].get_or_init(|| self.sparse[i].to_dense())
    }

    pub fn s_x(&self) -> &CMatrix {
        self.dense(Collective::Sx)
    }
    pub fn s_y(&self) -> &CMatrix {
        self.dense(Collective::Sy)
    }
    pub fn s_z(&self) -> &CMatrix {
        self.dense(Collective::Sz)
    }
    pub fn s_plus(&self) -> &CMatrix {
        self.dense(Collective::SPlus)
    }
    pub fn s_minus(&self) -> &CMatrix {
        self.dense(Collective::SMinus)
    }
    pub fn d_plus(&self) -> &CMatrix {
        self.dense(Collective::DPlus)
    }
    pub fn d_minus(&self) -> &CMatrix {
        self.dense(Collective::DMinus)
    }
    /// σ_z^j for each site; empty in the Dicke-sector basis.
    pub fn site_sigma_z(&self) -> &[SparseMatrix] {
        &self.site_sigma_z
    }
    /// D_j⁻ = u|1⟩_j⟨2| + v|2⟩_j⟨1| for each site; empty in the Dicke-sector
    /// basis.
    pub fn site_d_minus(&self) -> &[SparseMatrix] {
        &self.site_d_minus
    }

    /// S² = S_x² + S_y² + S_z².
    pub fn s_squared(&self) -> CMatrix {
        let sq = |op| {
            let s = self.sparse(op);
            s.matmul(s)
        };
        sq(Collective::Sx)
            .add(&sq(Collective::Sy))
            .add(&sq(Collective::Sz))
            .to_dense()
    }
}

pub fn build_operators(basis: SpinBasis, u: f64, v: f64) -> Result<SpinOperatorSet> {
    if !(u.is_finite() && v.is_finite()) || (u * u - v * v - 1.0).abs() > 1e-12 * u * u {
        return Err(Error::param("u, v", "require u² − v² = 1"));
    }
    let n = basis.n_spins();
    let dim = basis.dim();
    let (s_plus, s_z, site_sigma_z, site_d_minus) = match basis.kind() {
        BasisKind::Full => {
            let mut sp_trip = Vec::new();
            let mut sz_trip = Vec::new();
            let mut sigma_z = Vec::with_capacity(n);
            let mut d_minus = Vec::with_capacity(n);
            for j in 0..n {
                let sp = lift_site(&SIGMA_PLUS, j, n);
                let sm = lift_site(&SIGMA_MINUS, j, n);
                let sz = lift_site(&SIGMA_Z, j, n);
                sp_trip.extend(sp.iter());
                sz_trip.extend(sz.iter().map(|(r, c, x)| (r, c, 0.5 * x)));
                d_minus.push(sm.scale(real(u)).add(&sp.scale(real(v))));
                sigma_z.push(sz);
            }
            (
                SparseMatrix::from_triplets(dim, dim, sp_trip),
                SparseMatrix::from_triplets(dim, dim, sz_trip),
                sigma_z,
                d_minus,
            )
        }
        BasisKind::DickeSector => {
            let s_plus = SparseMatrix::from_triplets(
                dim,
                dim,
                // ⟨S, m+1|S₊|S, m⟩ = √((S−m)(S+m+1)) = √(k (N−k+1))
                (1..dim).map(|k| (k - 1, k, real(((k * (n - k + 1)) as f64).sqrt()))),
            );
            let s_z = SparseMatrix::from_triplets(
                dim,
                dim,
                (0..dim).map(|k| (k, k, real(0.5 * (n as f64 - 2.0 * k as f64)))),
            );
            (s_plus, s_z, Vec::new(), Vec::new())
        }
    };
    let s_minus = s_plus.adjoint();
    let s_x = s_plus.add(&s_minus).scale(real(0.5));
    let s_y = s_plus.add(&s_minus.scale(-ONE)).scale(-I * 0.5);
    let d_minus = s_minus.scale(real(u)).add(&s_plus.scale(real(v)));
    let d_plus = d_minus.adjoint();
    Ok(SpinOperatorSet {
        basis,
        u,
        v,
        sparse: [s_x, s_y, s_z, s_plus, s_minus, d_plus, d_minus],
        dense: Default::default(),
        site_sigma_z,
        site_d_minus,
    })
}

/// Trace, Hermiticity and positivity of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(data: &CMatrix) -> Self {
        StateDiagnostics {
            trace_error: (data.trace() - ONE).norm(),
            hermiticity_error: linalg::hermiticity_error(data),
            min_eigenvalue: linalg::min_hermitian_eigenvalue(data),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITICITY_TOL
            && self.min_eigenvalue >= -POSITIVITY_TOL
    }
}

/// Hermitian, unit-trace, positive semidefinite state tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: SpinBasis,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates against the trace, Hermiticity and positivity tolerances.
    pub fn new(basis: SpinBasis, data: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(basis, data)?;
        let diag = rho.diagnostics();
        if !diag.is_physical() {
            return Err(Error::InvalidState(format!(
                "trace error {:e}, hermiticity error {:e}, min eigenvalue {:e}",
                diag.trace_error, diag.hermiticity_error, diag.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Only checks the shape; used for intermediate integrator states.
    pub fn from_raw(basis: SpinBasis, data: CMatrix) -> Result<Self> {
        if data.nrows() != basis.dim() || data.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: data.nrows().max(data.ncols()),
            });
        }
        Ok(DensityMatrix { basis, data })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(basis: SpinBasis, ket: &DVector<C64>) -> Result<Self> {
        if ket.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: ket.len(),
            });
        }
        let norm2 = ket.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let data = ket * ket.adjoint() / real(norm2);
        Ok(DensityMatrix { basis, data })
    }

    pub fn maximally_mixed(basis: SpinBasis) -> Self {
        let d = basis.dim();
        DensityMatrix {
            basis,
            data: CMatrix::identity(d, d) / real(d as f64),
        }
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics::of(&self.data)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.data, &self.data).re
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch("trace distance between different bases".into()));
        }
        Ok(linalg::trace_distance(&self.data, &other.data))
    }

    /// Fidelity `⟨ψ|ρ|ψ⟩` with a pure state.
    pub fn overlap_with(&self, ket: &DVector<C64>) -> f64 {
        (ket.adjoint() * &self.data * ket)[(0, 0)].re / ket.norm_squared()
    }
}

fn check_two_m(n: usize, two_m: i64) -> Result<()> {
    let n_i = n as i64;
    if two_m.abs() > n_i || (n_i - two_m).rem_euclid(2) != 0 {
        return Err(Error::BadQuantumNumber { n_spins: n, two_m });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `|N/2, m⟩` with `m = two_m / 2`.
pub fn dicke_ket(basis: SpinBasis, two_m: i64) -> Result<DVector<C64>> {
    let n = basis.n_spins();
    check_two_m(n, two_m)?;
    let n_down = ((n as i64 - two_m) / 2) as usize;
    let mut ket = DVector::zeros(basis.dim());
    match basis.kind() {
        BasisKind::DickeSector => ket[n_down] = ONE,
        BasisKind::Full => {
            let amp = real(1.0 / binomial(n, n_down).sqrt());
            for a in 0..basis.dim() {
                if a.count_ones() as usize == n_down {
                    ket[a] = amp;
                }
            }
        }
    }
    Ok(ket)
}

pub fn dicke_state(basis: SpinBasis, two_m: i64) -> Result<DensityMatrix> {
    DensityMatrix::pure(basis, &dicke_ket(basis, two_m)?)
}

/// Isometry `W` (`2^N × (N+1)`) whose column `k` is the symmetric product
/// state `|N/2, N/2 − k⟩`.
pub fn symmetric_isometry(n_spins: usize) -> Result<CMatrix> {
    let full = SpinBasis::full(n_spins)?;
    let mut w = CMatrix::zeros(full.dim(), n_spins + 1);
    for k in 0..=n_spins {
        let ket = dicke_ket(full, n_spins as i64 - 2 * k as i64)?;
        w.set_column(k, &ket);
    }
    Ok(w)
}

/// Lifts a Dicke-sector state into the full basis, `W ρ W†`.
pub fn embed_in_full(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.basis().is_full() {
        return Ok(rho.clone());
    }
    let n = rho.basis().n_spins();
    let w = symmetric_isometry(n)?;
    DensityMatrix::from_raw(SpinBasis::full(n)?, &w * rho.data() * w.adjoint())
}

/// `Tr(ρ · op)`.
pub fn expectation(rho: &DensityMatrix, op: &CMatrix) -> Result<C64> {
    let d = rho.basis().dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: op.nrows().max(op.ncols()),
        });
    }
    Ok(linalg::trace_of_product(rho.data(), op))
}

/// Real expectation of a Hermitian operator; rejects a non-negligible
/// imaginary residual.
pub fn expectation_real(rho: &DensityMatrix, op: &CMatrix) -> Result<f64> {
    let z = expectation(rho, op)?;
    if z.im.abs() > EXPECTATION_IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::ComplexExpectation { real: z.re, imag: z.im });
    }
    Ok(z.re)
}

/// Applies the transposition of sites `i` and `j` (full basis).
pub fn swap_sites(rho: &DensityMatrix, i: usize, j: usize) -> Result<DensityMatrix> {
    let basis = rho.basis();
    if !basis.is_full() {
        return Err(Error::BasisMismatch("site permutations need the full basis".into()));
    }
    let n = basis.n_spins();
    if i >= n || j >= n {
        return Err(Error::param("site", "index out of range"));
    }
    let (si, sj) = (site_shift(i, n), site_shift(j, n));
    let perm = |a: usize| {
        let (bi, bj) = ((a >> si) & 1, (a >> sj) & 1);
        (a & !(1 << si) & !(1 << sj)) | (bj << si) | (bi << sj)
    };
    let d = basis.dim();
    let src = rho.data();
    let data = DMatrix::from_fn(d, d, |a, b| src[(perm(a), perm(b))]);
    DensityMatrix::from_raw(basis, data)
}

/// `e^{−iφS_z} ρ e^{iφS_z}`.
pub fn rotate_about_z(rho: &DensityMatrix, ops: &SpinOperatorSet, angle: f64) -> Result<DensityMatrix> {
    if rho.basis() != ops.basis() {
        return Err(Error::BasisMismatch("state and operators use different bases".into()));
    }
    let sz = ops.s_z();
    let phase: Vec<C64> = (0..sz.nrows()).map(|k| (-I * angle * sz[(k, k)].re).exp()).collect();
    let d = rho.basis().dim();
    let src = rho.data();
    let data = DMatrix::from_fn(d, d, |a, b| phase[a] * src[(a, b)] * phase[b].conj());
    DensityMatrix::from_raw(rho.basis(), data)
}
