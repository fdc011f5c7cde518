use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("spectral density is singular at |lambda| = 0")]
    Singularity,

    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("quadrature did not converge: {context} (residual estimate {residual:e})")]
    QuadratureFailure { context: String, residual: f64 },

    #[error("quadrature budget exceeded: {0}")]
    Budget(String),

    #[error("Hermite order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("test function is not square integrable against the Gaussian weight: {0}")]
    Integrability(String),

    #[error("no Hermite coefficient with 1 <= j <= {jmax} exceeds the rank threshold")]
    RankUndetected { jmax: usize },

    #[error("Hermite rank mismatch: requested {expected}, detected {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("covariance matrix is not positive semidefinite (last jitter tried {jitter:e})")]
    NonPsdCovariance { jitter: f64 },

    #[error("grid has {points} points, above the exact-simulation limit of {limit}; use the spectral method")]
    GridTooLarge { points: usize, limit: usize },

    #[error("spectral discretization error: {0}")]
    SpectralDiscretization(String),

    #[error("lag {lag:?} does not fit in the grid")]
    Lag { lag: Vec<i64> },

    #[error("field does not cover the requested region: {0}")]
    Coverage(String),

    #[error(
        "long-range condition violated: alpha * m = {product} must be strictly below n = {n}"
    )]
    LongRangeViolation { product: f64, n: usize },

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("numerical linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
