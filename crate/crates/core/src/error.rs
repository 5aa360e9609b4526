//! Error type shared by the solver modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("grid size {n} is invalid: need a power of two ≥ 4")]
    GridSize { n: usize },

    #[error("side length must be positive, got {0}")]
    SideLength(f64),

    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },

    #[error("field is bound to a different manifold (expected id {expected}, got {got})")]
    ManifoldMismatch { expected: u64, got: u64 },

    #[error("{what} must be strictly positive everywhere (min = {min})")]
    NonPositiveCoefficient { what: &'static str, min: f64 },

    #[error("invalid parameter {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },

    #[error("conjugate gradient did not converge in {iters} iterations (relative residual {rel_residual:.3e})")]
    CgDiverged { iters: usize, rel_residual: f64 },

    #[error("maximum of {what} not attained: ratio still rising at the {side} scan boundary (last value {last:.6e})")]
    UnboundedSuspect {
        what: &'static str,
        side: &'static str,
        last: f64,
    },

    #[error("well potential attains its minimum at the domain boundary; enlarge [{lo}, {hi}]")]
    DomainTooSmall { lo: f64, hi: f64 },

    #[error("operation requires psi mode {expected}, params use {got}")]
    WrongPsiMode {
        expected: &'static str,
        got: &'static str,
    },

    #[error("mountain pass endpoint has energy {energy:.6e} ≥ 0; scale it until the energy is negative")]
    EndpointNotNegative { energy: f64 },

    #[error("solver configuration invalid: {0}")]
    BadSolverConfig(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("snapshot i/o: {0}")]
    SnapshotIo(#[from] std::io::Error),

    #[error("snapshot sidecar: {0}")]
    SnapshotSidecar(#[from] serde_json::Error),

    #[error("snapshot does not match manifold: {0}")]
    SnapshotMismatch(String),
}
