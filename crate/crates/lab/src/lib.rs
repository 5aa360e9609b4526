//! Experiment front end for the Schrödinger–Maxwell variational solvers.
//!
//! The library side of the `smvar` binary: configuration parsing, the
//! randomized identity battery, the three experiment suites (sublinear
//! threshold scan, multi-well multiplicity, superlinear admissibility), and
//! report emission (JSON, CSV, gnuplot scripts).

// Same convention as the core crate: `!(x > bound)` rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<smvar_core::CoreError> for LabError {
    fn from(e: smvar_core::CoreError) -> Self {
        use smvar_core::CoreError::*;
        match e {
            GridSize { .. } | SideLength(..) | NonFinite { .. } | NonPositiveCoefficient { .. }
            | InvalidParameter { .. } | WrongPsiMode { .. } | BadSolverConfig(..) | Expr(..)
            | UnboundedSuspect { .. } | DomainTooSmall { .. } => LabError::Config(e.to_string()),
            CgDiverged { .. } | EndpointNotNegative { .. } | ManifoldMismatch { .. }
            | SnapshotIo(..) | SnapshotSidecar(..) | SnapshotMismatch(..) => {
                LabError::Solver(e.to_string())
            }
        }
    }
}

impl From<toml::de::Error> for LabError {
    fn from(e: toml::de::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

/// Process exit codes of the CLI.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const SOLVER: i32 = 2;
    pub const BATTERY: i32 = 3;
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => exit_codes::CONFIG,
            LabError::Solver(_) | LabError::Io(_) => exit_codes::SOLVER,
        }
    }
}
