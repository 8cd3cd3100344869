use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tangent-angle curve could not be closed: residual {residual:.3e} after {iterations} Newton iterations")]
    NonClosable { residual: f64, iterations: usize },

    #[error("degenerate ground state: spectral gap {gap:.3e} is below 1e-12")]
    DegenerateGroundState { gap: f64 },

    #[error("operation requires a {expected} profile")]
    WrongProfileKind { expected: &'static str },

    #[error("integration domain too small: |V| at the {end} end is {value:.3e}, above 1e-8 of max|V| = {max:.3e}")]
    DomainTooSmall { end: &'static str, value: f64, max: f64 },

    #[error("eigensolver did not converge after {iterations} iterations; best residuals {residuals:?}")]
    Convergence { iterations: usize, residuals: Vec<f64> },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("trial function support [{lo}, {hi}] does not fit strictly inside the strip of half-length {half_length}")]
    TruncatedSupport { lo: f64, hi: f64, half_length: f64 },

    #[error("degenerate quadratic: q(phi) = {q_phi:.3e} is not positive")]
    DegenerateQuadratic { q_phi: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
