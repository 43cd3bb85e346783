use alloc::string::String;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate state: {0}")]
    DegenerateState(&'static str),

    #[error("state left the admissible domain at x_p = {station} m: {reason}")]
    Domain { station: f64, reason: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("points coincide (separation {0} m)")]
    CoincidentPoints(f64),

    #[error("line of sight outside the head-on range: {0}")]
    NotHeadOn(&'static str),

    #[error(
        "affine residual row {row} disagrees: closed form {closed_form:e}, definitional {definitional:e}"
    )]
    ResidualMismatch {
        row: usize,
        closed_form: f64,
        definitional: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid conic program: {0}")]
    InvalidProgram(String),

    #[error("conic solve failed at outer iteration {iteration} with status {status:?}")]
    SolverFailure { iteration: usize, status: SolveStatus },

    #[error("subproblem infeasible at outer iteration {iteration}")]
    InfeasibleSubproblem { iteration: usize },

    #[error("no convergence after {iterations} outer iterations")]
    NonConvergence { iterations: usize },

    #[error("time {t} s outside trajectory span [{start}, {end}] s")]
    OutOfSpan { t: f64, start: f64, end: f64 },
}
