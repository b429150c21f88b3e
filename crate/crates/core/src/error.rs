use thiserror::Error;

/// Errors raised by grid construction, solvers and measurements.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite {what} at node ({i}, {j})")]
    NonFinite { what: &'static str, i: usize, j: usize },

    #[error("stencil at node ({i}, {j}) leaves the domain")]
    StencilOutside { i: usize, j: usize },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate shift: max |a| = {max_norm} is not below 1")]
    Degenerate { max_norm: f64 },

    #[error("inadmissible obstacles at node ({i}, {j}): lower {lower} > upper {upper}")]
    Inadmissible { i: usize, j: usize, lower: f64, upper: f64 },

    #[error("Newton stagnated, residual history {history:?}")]
    NewtonStagnation { history: Vec<f64> },

    #[error("CFL condition violated: dt * speed / dx = {courant} > 1")]
    Cfl { courant: f64 },

    #[error("region of radius {radius} around ({x}, {y}) leaves the domain")]
    OutsideDomain { x: f64, y: f64, radius: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
