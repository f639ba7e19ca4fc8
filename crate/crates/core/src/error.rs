use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("power exceeds cutoff (k = {power}, M = {cutoff})")]
    PowerExceedsCutoff { power: usize, cutoff: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (relative residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("Bohr frequency {0} is not in the cluster table")]
    UnknownBohrFrequency(f64),
    #[error("non-integrable filter; use regularized variant")]
    NonIntegrableFilter,
    #[error("KMS structure requires adjoint-closed bare jumps")]
    NotAdjointClosed,
    #[error("KMS symmetry violated, check filter (residual {0:e})")]
    KmsViolated(f64),
    #[error("empty non-kernel spectrum")]
    EmptyGap,
    #[error("condition 2 not certifiable at this truncation")]
    NotCertifiable,
    #[error("window scale S = {scale} below 4‖H‖ = {required}")]
    WindowTooSmall { scale: f64, required: f64 },
    #[error("kernel range too short: tail estimate {tail:e} exceeds tolerance {tol:e}")]
    InsufficientRange { tail: f64, tol: f64 },
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("distance never reached epsilon; final distance {final_distance:e}")]
    NeverMixed { final_distance: f64 },
    #[error("duplicate residues modulo omega")]
    DuplicateResidues,
    #[error("Davies generator (sigma_E = 0) has no quadrature representation")]
    DaviesQuadrature,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
