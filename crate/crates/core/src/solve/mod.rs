//! LP/QP solving, branch-and-bound, and the L1 relaxation pipeline.

pub mod bnb;
pub mod lp;
pub mod problem;
pub mod qp;
pub mod sl1m;

pub use bnb::{branch_and_bound, presolve, BnbOptions, MipStats};
pub use lp::{solve_lp, solve_lp_with, LpOptions};
pub use problem::{Problem, SparseRows};
pub use qp::{solve_qp, solve_qp_with, QpOptions};
pub use sl1m::{reweighted_l1, sl1m_solve, Sl1mOptions, Sl1mOutcome, Sl1mStatus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// One line per pivot (LP) or proximal round (QP) when tracing is enabled.
    pub trace: Vec<String>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}
