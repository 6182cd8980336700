use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown element kind: {0}")]
    UnknownElementKind(String),

    #[error("inverted element {element}: det = {det:e}")]
    InvertedElement { element: usize, det: f64 },

    #[error("element inversion: J = {0:e}")]
    Inversion(f64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constraint on nonexistent dof {dof} (layout has {len})")]
    NoSuchDof { dof: usize, len: usize },

    #[error("dof {0} constrained twice")]
    DuplicateConstraint(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("floating conductor, no ground")]
    FloatingConductor,

    #[error("return mapping did not converge after {0} iterations")]
    ReturnMapping(usize),

    #[error("newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("time step failed after {cuts} cuts at t = {t:e}: {reason}")]
    StepAborted { t: f64, cuts: usize, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown region tag {0}")]
    UnknownRegion(i64),

    #[error("time {t} before first breakpoint {first}")]
    BeforeWaveform { t: f64, first: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("gmsh parse error at line {line}: {msg}")]
    Gmsh { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Failures that the time stepper answers with a step cut.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::InvertedElement { .. }
                | Error::Inversion(_)
                | Error::Singular(_)
                | Error::ReturnMapping(_)
                | Error::NewtonDiverged { .. }
        )
    }
}
