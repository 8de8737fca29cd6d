//! Simulation engine for dissipatively generated spin squeezing in an array of
//! SiV centers coupled through a one-dimensional phononic waveguide.
//!
//! The crate is layered bottom-up:
//!
//! - [`siv_model`]: single-center ground-state Hamiltonian and the mapping from
//!   Raman drive parameters to the squeezed jump operator `D⁻ = u S⁻ + v S⁺`.
//! - [`waveguide`]: linear-dispersion phonon continuum, emission rates and the
//!   emitter-emitter kernel `J_{j,m}`.
//! - [`spin_algebra`]: collective spin operators and density matrices in either
//!   the full `2^N` space or the permutation-symmetric `N+1` dimensional sector.
//! - [`lindblad`]: master-equation right-hand sides, time integration and
//!   steady-state solvers.
//! - [`squeezing`]: the two spin-squeezing witnesses.
//! - [`scenario`] and [`sweep`]: run-level plumbing used by the CLI, with
//!   sweep points evaluated on a rayon pool when the `parallel` feature is on.

pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod scenario;
pub mod siv_model;
pub mod spin_algebra;
pub mod squeezing;
pub mod sweep;
pub mod waveguide;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
