use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (mesh, problem data, solver settings).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Evaluation point outside the domain of a monotone graph.
    #[error("domain error: r = {r} is outside the graph domain [{lo}, {hi}]")]
    Domain { r: f64, lo: f64, hi: f64 },

    /// The resolvent inclusion has no solution: the graph is not maximal near `e`.
    #[error("graph is not maximal: w + {lambda}*alpha(w) = {e} has no solution ({detail})")]
    NonMaximal { lambda: f64, e: f64, detail: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no convergence after {iterations} iterations at step {step} (last update {last_update:.3e})")]
    Convergence {
        step: usize,
        iterations: usize,
        last_update: f64,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("result file {path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
