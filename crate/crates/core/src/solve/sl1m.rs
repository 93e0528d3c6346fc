//! Surface selection through the L1 relaxation: one LP, a per-step sparsity
//! check, and bounded enumeration of the steps it leaves undecided.

use serde::{Deserialize, Serialize};

use super::{solve_lp, SolveError, Status};
use crate::formulation::{Mode, ProblemInstance};

#[derive(Clone, Debug, PartialEq)]
pub struct Sl1mOptions {
    pub max_trials: usize,
    /// Slacks below this value count as zero (surface selected).
    pub zero_tol: f64,
    /// Relative weight step between consecutive candidate ranks; the
    /// closest-ranked candidate gets the largest weight. Breaks the ties of
    /// the L1 objective between adjacent surfaces; 0 gives uniform weights.
    pub tie_break: f64,
}

impl Default for Sl1mOptions {
    fn default() -> Self {
        Sl1mOptions {
            max_trials: 4000,
            zero_tol: 1e-6,
            tie_break: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sl1mStatus {
    /// Every step decided by the relaxation.
    Decided,
    /// Undecided steps resolved by enumeration.
    Fallback,
    /// Every combination of the undecided steps tried, none feasible.
    Exhausted,
    /// Enumeration stopped at the trial limit.
    TrialLimit,
    /// The relaxation itself is infeasible.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sl1mOutcome {
    pub status: Sl1mStatus,
    /// Surface id per step on success.
    pub selection: Option<Vec<usize>>,
    /// Steps the first relaxation left undecided.
    pub undecided: Vec<usize>,
    pub trials_used: usize,
    pub fallback_exhausted: bool,
    pub relaxed_objective: f64,
    /// Solution of the last feasible LP (relaxation or successful trial).
    pub x: Vec<f64>,
    /// Objective trace; for reweighting, `sum ln(alpha + eps)` per iteration.
    pub objective_trace: Vec<f64>,
}

impl Sl1mOutcome {
    pub fn is_success(&self) -> bool {
        self.selection.is_some()
    }
}

/// Per-step decision: the unique candidate with a zero slack while all
/// others are strictly positive.
pub fn decide(inst: &ProblemInstance, x: &[f64], tol: f64) -> Vec<Option<usize>> {
    inst.layout
        .steps
        .iter()
        .map(|s| {
            let zero: Vec<usize> = s.candidates.iter().filter(|c| x[c.2] < tol).map(|c| c.0).collect();
            let positive = s.candidates.iter().filter(|c| x[c.2] > tol).count();
            (zero.len() == 1 && positive + 1 == s.candidates.len()).then(|| zero[0])
        })
        .collect()
}

fn check_mode(inst: &ProblemInstance) -> Result<(), SolveError> {
    if inst.mode != Mode::Sl1m {
        return Err(SolveError::InvalidProblem(format!(
            "expected an L1-relaxation instance, got {:?}",
            inst.mode
        )));
    }
    Ok(())
}

/// Slack weights `1 + tie_break * score` from [`ProblemInstance::preference`].
fn rank_weights(inst: &ProblemInstance, tie_break: f64) -> Vec<(usize, f64)> {
    inst.preference().into_iter().map(|(c, s)| (c, 1.0 + tie_break * s)).collect()
}

pub fn sl1m_solve(inst: &ProblemInstance, opts: &Sl1mOptions) -> Result<Sl1mOutcome, SolveError> {
    check_mode(inst)?;
    let mut p = inst.problem.clone();
    for (c, w) in rank_weights(inst, opts.tie_break) {
        p.cost[c] *= w;
    }
    let r = solve_lp(&p)?;
    if r.status != Status::Optimal {
        return Ok(infeasible_outcome(r.objective));
    }
    let trace = vec![r.objective];
    finish(inst, r.x, r.objective, trace, opts)
}

/// Iteratively reweighted L1: weights `1 / (alpha + eps)` from the previous
/// solve, then the same decision and fallback as [`sl1m_solve`].
pub fn reweighted_l1(inst: &ProblemInstance, iters: usize, eps: f64, opts: &Sl1mOptions) -> Result<Sl1mOutcome, SolveError> {
    check_mode(inst)?;
    let mut p = inst.problem.clone();
    let weights = rank_weights(inst, opts.tie_break);
    for &(c, w) in &weights {
        p.cost[c] *= w;
    }
    let mut trace = Vec::new();
    let mut first_objective = None;
    let mut x = Vec::new();
    for it in 0..iters.max(1) {
        let r = solve_lp(&p)?;
        if r.status != Status::Optimal {
            return Ok(infeasible_outcome(r.objective));
        }
        first_objective.get_or_insert(r.objective);
        trace.push(weights.iter().map(|&(c, _)| (r.x[c].max(0.0) + eps).ln()).sum());
        x = r.x;
        if decide(inst, &x, opts.zero_tol).iter().all(Option::is_some) || it + 1 == iters {
            break;
        }
        for &(c, w) in &weights {
            p.cost[c] = w / (x[c].max(0.0) + eps);
        }
    }
    finish(inst, x, first_objective.unwrap_or(0.0), trace, opts)
}

fn infeasible_outcome(objective: f64) -> Sl1mOutcome {
    Sl1mOutcome {
        status: Sl1mStatus::Infeasible,
        selection: None,
        undecided: Vec::new(),
        trials_used: 0,
        fallback_exhausted: false,
        relaxed_objective: objective,
        x: Vec::new(),
        objective_trace: Vec::new(),
    }
}

fn finish(
    inst: &ProblemInstance,
    x: Vec<f64>,
    relaxed_objective: f64,
    objective_trace: Vec<f64>,
    opts: &Sl1mOptions,
) -> Result<Sl1mOutcome, SolveError> {
    let decided = decide(inst, &x, opts.zero_tol);
    let undecided: Vec<usize> = (0..decided.len()).filter(|&i| decided[i].is_none()).collect();
    let mut out = Sl1mOutcome {
        status: Sl1mStatus::Decided,
        selection: None,
        undecided: undecided.clone(),
        trials_used: 0,
        fallback_exhausted: false,
        relaxed_objective,
        x,
        objective_trace,
    };
    if undecided.is_empty() {
        out.selection = Some(decided.into_iter().map(|d| d.expect("decided")).collect());
        return Ok(out);
    }

    // fewest candidates first; within a step, smallest slack first
    let mut order = undecided.clone();
    order.sort_by_key(|&i| (inst.layout.steps[i].candidates.len(), i));
    let choices: Vec<Vec<(usize, usize)>> = order
        .iter()
        .map(|&i| {
            let mut c: Vec<(usize, usize)> = inst.layout.steps[i].candidates.iter().map(|c| (c.0, c.2)).collect();
            c.sort_by(|a, b| out.x[a.1].total_cmp(&out.x[b.1]).then(a.0.cmp(&b.0)));
            c
        })
        .collect();

    let mut base = inst.problem.clone();
    for (i, d) in decided.iter().enumerate() {
        if let Some(j) = d {
            let col = inst.layout.steps[i].selection_of(*j).expect("candidate column");
            base.upper[col] = 0.0;
        }
    }
    let mut digits = vec![0usize; order.len()];
    loop {
        if out.trials_used >= opts.max_trials {
            out.status = Sl1mStatus::TrialLimit;
            out.fallback_exhausted = true;
            return Ok(out);
        }
        let mut trial = base.clone();
        for (d, c) in digits.iter().zip(&choices) {
            trial.upper[c[*d].1] = 0.0;
        }
        out.trials_used += 1;
        let r = solve_lp(&trial)?;
        if r.status == Status::Optimal {
            let mut selection: Vec<usize> = decided.iter().map(|d| d.unwrap_or(usize::MAX)).collect();
            for ((&i, d), c) in order.iter().zip(&digits).zip(&choices) {
                selection[i] = c[*d].0;
            }
            out.status = Sl1mStatus::Fallback;
            out.selection = Some(selection);
            out.x = r.x;
            return Ok(out);
        }
        // odometer: the last undecided step varies fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                out.status = Sl1mStatus::Exhausted;
                out.fallback_exhausted = true;
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < choices[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}
