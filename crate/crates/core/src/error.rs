use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate drive: (Ω₂/2Δ₂)² = {dominant:.6e} must exceed (Ω₁/2Δ₁)² = {minor:.6e}")]
    DegenerateDrive { dominant: f64, minor: f64 },

    #[error("dimension guard: {what} (limit {limit}, requested {requested})")]
    DimensionGuard {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    #[error("bad quantum number: 2m = {two_m} is not allowed for N = {n_spins}")]
    BadQuantumNumber { n_spins: usize, two_m: i64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary part {imag:e} (real part {real:e})")]
    ComplexExpectation { real: f64, imag: f64 },

    #[error("degenerate mean spin: ⟨S_y⟩² + ⟨S_z⟩² = {denominator:e}")]
    DegenerateMeanSpin { denominator: f64 },

    #[error("integration failure at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("positivity loss at t = {time}: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityLoss { time: f64, min_eigenvalue: f64 },

    #[error("steady state not reached by Γt = {gamma_t}: residual ‖dρ/dt‖ = {residual:e}")]
    NonConvergence { gamma_t: f64, residual: f64 },

    /// `kernel_dim` is `None` when uniqueness was ruled out structurally
    /// (conserved S² in the full basis) without building the Liouvillian.
    #[error("steady state is not unique ({}); supply an initial state to select the sector", describe_kernel(.kernel_dim))]
    NonUniqueKernel { kernel_dim: Option<usize> },
}

fn describe_kernel(dim: &Option<usize>) -> String {
    match dim {
        Some(d) => format!("kernel dimension {d}"),
        None => "several conserved S sectors".to_string(),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery itself, as opposed to
    /// rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. }
                | Error::PositivityLoss { .. }
                | Error::NonConvergence { .. }
                | Error::NonUniqueKernel { .. }
        )
    }
}
