use thiserror::Error;

use crate::picard::ContractionLog;

/// Errors raised anywhere in the library.
///
/// [`Error::exit_code`] maps each variant onto the CLI convention:
/// 2 for usage/configuration problems, 1 for solver or invariant failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mesh format error at line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("Neumann data incompatible: total flux {flux:e} exceeds tolerance {tol:e}")]
    NeumannCompatibility { flux: f64, tol: f64 },

    #[error("flow map: {0}")]
    FlowMap(String),

    #[error("inverse flow did not converge: residual {residual:e} after {iterations} iterations")]
    FlowInversion { residual: f64, iterations: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("singular viscosity: {0}")]
    SingularViscosity(String),

    #[error("fixed-point iteration is not contractive (last ratio {ratio:.4} after {iterations} iterations)")]
    NonContraction {
        ratio: f64,
        iterations: usize,
        log: Box<ContractionLog>,
    },

    #[error("data exceed the smallness gate: linear iterate norm {norm:e} > gamma/2 = {limit:e}")]
    SmallnessGate { norm: f64, limit: f64 },

    #[error("volterra iteration not contractive down to horizon {horizon:e}")]
    VolterraHorizon { horizon: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MeshFormat { .. }
            | Error::Input(_)
            | Error::Config { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::InvalidGeometry(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
