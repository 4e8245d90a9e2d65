use thiserror::Error;

/// Errors raised by the verification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported dimensions n = {n}, m = {m}")]
    UnsupportedDimension { n: usize, m: usize },

    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular Jacobian at node {node} (det = {det:e})")]
    SingularJacobian { node: usize, det: f64 },

    #[error("tangent element violates compatibility by {residual:e} at node {node}")]
    Incompatible { node: usize, residual: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("model is not convex; the dual norm is undefined")]
    NotConvex,

    #[error("CFL condition violated: dy = {dy:e} > dx = {dx:e}")]
    Cfl { dx: f64, dy: f64 },

    #[error("solution blew up at step {step} (|z| > {guard:e})")]
    BlowUp { step: usize, guard: f64 },

    #[error("curve outside the evaluation domain: {0}")]
    Domain(String),

    #[error("unsupported functional: {0}")]
    Unsupported(String),

    #[error("residuals at the noise floor; slope fit refused ({0})")]
    Floor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
