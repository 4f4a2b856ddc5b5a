use thiserror::Error;

pub type Result<T> = std::result::Result<T, CpmError>;

#[derive(Debug, Error)]
pub enum CpmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size guard exceeded: {what} needs {needed}, limit is {limit}{hint}")]
    SizeGuard {
        what: String,
        needed: u128,
        limit: u128,
        hint: String,
    },

    #[error("polynomial has non-real roots: {0}")]
    NonRealRoot(String),

    #[error("roots too close to separate at the working precision: {0}")]
    RootClusterTooTight(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("orthogonality violated: residual {residual:e} exceeds tolerance {tolerance:e}; raise the precision")]
    OrthogonalityViolation { residual: f64, tolerance: f64 },

    #[error("rapidities lie on different curves (k = {k_p} vs {k_q})")]
    CurveMismatch { k_p: f64, k_q: f64 },

    #[error("sector {q}: top eigenvalue moduli {first:e} and {second:e} coincide")]
    DegenerateMaxEigenvalue { q: u32, first: f64, second: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CpmError {
    pub(crate) fn guard(what: impl Into<String>, needed: u128, limit: u128) -> Self {
        CpmError::SizeGuard {
            what: what.into(),
            needed,
            limit,
            hint: String::new(),
        }
    }
}
