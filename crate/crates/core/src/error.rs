use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fluid basis is not orthonormal on this grid: max Gram defect {defect:.3e} exceeds {tol:.1e}")]
    GramNotOrthonormal { defect: f64, tol: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("collision frequency is not positive at velocity node {node} (nu = {value:.3e})")]
    NonPositiveFrequency { node: usize, value: f64 },

    #[error("kernel margin violated at eta = {eta:.4}: b0 = {b0:.4e} < {required:.4e}")]
    KernelMarginViolated { eta: f64, b0: f64, required: f64 },

    #[error("random variable z = {z} outside |z| <= {bound}")]
    RandomVariableOutOfRange { z: f64, bound: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("spectral gap is not positive (estimate {0:.3e})")]
    GapNonPositive(f64),

    #[error("coupling pattern is not tridiagonal: chi[{i}][{k}] is nonzero")]
    BandwidthViolation { i: usize, k: usize },

    #[error("micro field has fluid component {norm:.3e} above tolerance {tol:.1e}")]
    ProjectionNotApplied { norm: f64, tol: f64 },

    #[error("time step {dt:.3e} violates the CFL bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("implicit collision solve is singular")]
    SingularImplicitSolve,

    #[error("non-finite network output")]
    NonFiniteOutput,

    #[error("training diverged at step {step}: loss {loss:.3e}")]
    DivergedLoss { step: usize, loss: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that stem from user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidGrid(_)
                | Error::Unsupported(_)
                | Error::RandomVariableOutOfRange { .. }
        )
    }
}
