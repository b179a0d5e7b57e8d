use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A geometric or material parameter lies outside its admissible range.
    #[error("parameter out of range: {0}")]
    ParameterDomain(String),

    /// An argument lies outside the domain of an operation (a point off the
    /// boundary, a field on the wrong mesh, a negative stress magnitude, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("Newton iteration did not converge: {reason}")]
    NonConvergence {
        reason: String,
        report: Box<SolveReport>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
