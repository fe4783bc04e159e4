use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field does not belong to this grid")]
    GridMismatch,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation undefined for the zero field")]
    ZeroField,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("Newton iteration diverged at beta = {beta} (residual {residual:.3e})")]
    NewtonDivergence { beta: f64, residual: f64 },

    #[error(
        "solution collapsed to a semitrivial pair at beta = {beta} \
         (component norms {norm_u:.3e}, {norm_v:.3e}, threshold {threshold:.3e})"
    )]
    SemitrivialCollapse {
        beta: f64,
        norm_u: f64,
        norm_v: f64,
        threshold: f64,
    },

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
