use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },

    #[error("matrix is not orthogonal (|QQ' - I|_F = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("polynomial is not Schur-stable (spectral radius {radius})")]
    Unstable { radius: f64 },

    #[error(
        "pre-parameter V_{lag} is numerically singular (smallest eigenvalue {min_eigenvalue:e}); \
         boundary points of the stable region are not representable"
    )]
    RankDeficient { lag: usize, min_eigenvalue: f64 },

    #[error("leading block of order {order} is singular")]
    SingularBlock { order: usize },

    #[error(
        "rotation has an eigenvalue at -1 and lies outside the Cayley chart; \
         perturb the matrix slightly before encoding"
    )]
    CayleyExcluded,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigenvalue computation did not converge")]
    EigenFailure,

    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
