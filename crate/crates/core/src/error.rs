use thiserror::Error;

use crate::model::{ControlActionId, StateId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),

    /// An interval row admits no probability distribution.
    #[error("infeasible row{}: sum lo = {sum_lo}, sum hi = {sum_hi}", fmt_location(.location))]
    Infeasible {
        location: Option<(StateId, ControlActionId)>,
        sum_lo: f64,
        sum_hi: f64,
    },

    #[error(
        "value iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    Divergence { iterations: usize, residual: f64 },

    #[error("internal solver error: {0}")]
    Internal(String),

    /// Caller broke an operation's contract (e.g. observation without a measurement).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_location(loc: &Option<(StateId, ControlActionId)>) -> String {
    match loc {
        Some((s, a)) => format!(" at ({s}, {a})"),
        None => String::new(),
    }
}
