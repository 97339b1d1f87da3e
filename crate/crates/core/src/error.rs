use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is not symmetric: max |m_ij - m_ji| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("Lambda is numerically singular: min |lambda| = {min_abs:e} <= {gate:e}")]
    SingularLambda { min_abs: f64, gate: f64 },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix exponential overflowed (non-finite entries)")]
    ExpOverflow,

    #[error("Euler-Maruyama diverged at step {step}")]
    EmDiverged { step: usize },

    #[error("noise part requires an exact or locally-linearized trajectory, got scheme {scheme}")]
    UnknownScheme { scheme: String },

    #[error("covariance matrix is not positive semidefinite: min eigenvalue {min_eig:e} below -{tolerance:e}")]
    NotPsd { min_eig: f64, tolerance: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
