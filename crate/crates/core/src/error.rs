use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DruidError>;

#[derive(Debug, Error)]
pub enum DruidError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no connected graph after {attempts} draws")]
    GenerationFailure { attempts: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("reference solver stopped after {iterations} iterations with residual {residual:e}")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("inconsistent reference solution: {0}")]
    InconsistentReference(String),

    #[error("unsupported diagnostic: {0}")]
    UnsupportedDiagnostic(String),

    #[error("theorem not applicable: {0}")]
    InapplicableTheorem(String),

    #[error("at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<DruidError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}
