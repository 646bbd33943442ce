//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Config file could not be parsed; carries the 1-based line number.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// A parsed config violates a model invariant; names the offending field.
    #[error("invalid config field `{field}`: {msg}")]
    Validation { field: String, msg: String },

    /// Mirror pose coincides with a lower-mirror centre of curvature.
    #[error("degenerate geometry: pose coincides with centre of curvature of cavity {cavity}")]
    DegenerateGeometry { cavity: usize },

    /// Equilibrium iteration failed; carries the last iterate for diagnostics.
    #[error("no convergence after {iterations} iterations (|grad| = {grad_norm:.3e} N at [{x:.6e}, {y:.6e}, {z:.6e}])")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        x: f64,
        y: f64,
        z: f64,
    },

    /// Root bracketing failed for a scalar solve.
    #[error("infeasible: {msg}")]
    Infeasible { msg: String },

    /// Scan region exceeds the configured candidate cap.
    #[error("region too large: {candidates} candidates exceed cap {cap}")]
    RegionTooLarge { candidates: usize, cap: usize },

    /// Operation requires a stable trap site.
    #[error("invalid site: {msg}")]
    InvalidSite { msg: String },

    /// Mode analysis hit a negative stiffness eigenvalue.
    #[error("unstable site: stiffness eigenvalue {eigenvalue:.6e} J/m^2 is not positive")]
    UnstableSite { eigenvalue: f64 },

    /// Generic numerical failure (quadrature, step underflow, ...).
    #[error("numerical error: {msg}")]
    Numerical { msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { msg: msg.into() }
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible { msg: msg.into() }
    }

    /// Process exit code for the CLI: 2 config, 3 numerical, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } | Error::Validation { .. } => 2,
            Error::Io(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
