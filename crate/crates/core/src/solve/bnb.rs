//! Branch-and-bound over binary columns with an optional bound-propagation presolve.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{solve_qp, Problem, SolveError, SolveResult, Status};

#[derive(Clone, Debug, PartialEq)]
pub struct BnbOptions {
    pub presolve: bool,
    pub node_limit: usize,
    pub integrality_tol: f64,
    /// Stop at the first integral solution (feasibility search).
    pub first_incumbent: bool,
    pub trace: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            presolve: true,
            node_limit: 20_000,
            integrality_tol: 1e-6,
            first_incumbent: false,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MipStats {
    /// Child nodes solved; 0 when the root relaxation was already integral.
    pub node_count: usize,
    pub incumbent_updates: usize,
    pub presolve_enabled: bool,
    /// Binaries fixed by presolve.
    pub presolve_fixed: usize,
    /// Continuous bounds tightened by presolve.
    pub presolve_tightened: usize,
    pub root_objective: Option<f64>,
    pub root_integral: bool,
    pub presolve_time: Duration,
    pub solve_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Presolved {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub infeasible: bool,
    pub fixed: usize,
    pub tightened: usize,
}

const PRESOLVE_ROUNDS: usize = 50;

/// Activity-based bound propagation over every row, with integer rounding
/// of binary bounds (which also enforces cardinality rows).
pub fn presolve(p: &Problem) -> Presolved {
    let mut lo = p.lower.clone();
    let mut hi = p.upper.clone();
    let mut tightened = 0;
    let mut infeasible = false;
    'rounds: for _ in 0..PRESOLVE_ROUNDS {
        let mut changed = false;
        let rows = (0..p.ineq.len())
            .map(|r| (p.ineq.row(r), p.ineq.rhs(r), 1.0))
            .chain((0..p.eq.len()).flat_map(|r| {
                let (row, rhs) = (p.eq.row(r), p.eq.rhs(r));
                [(row, rhs, 1.0), (row, rhs, -1.0)]
            }));
        for ((cols, vals), rhs, sign) in rows {
            let b = sign * rhs;
            let mut min_act = 0.0;
            let mut inf_count = 0;
            let mut inf_col = usize::MAX;
            for (&j, &v) in cols.iter().zip(vals) {
                let a = sign * v;
                let m = if a > 0.0 { a * lo[j] } else { a * hi[j] };
                if m.is_finite() {
                    min_act += m;
                } else {
                    inf_count += 1;
                    inf_col = j;
                }
            }
            if inf_count > 1 {
                continue;
            }
            for (&j, &v) in cols.iter().zip(vals) {
                let a = sign * v;
                let own = if a > 0.0 { a * lo[j] } else { a * hi[j] };
                let rest = if inf_count == 1 {
                    if j != inf_col {
                        continue;
                    }
                    min_act
                } else {
                    min_act - own
                };
                let limit = (b - rest) / a;
                if !limit.is_finite() {
                    continue;
                }
                if a > 0.0 {
                    let mut u = limit;
                    if p.integer[j] {
                        u = (u + 1e-9).floor();
                    } else {
                        u += 1e-9 * (1.0 + u.abs());
                    }
                    if u < hi[j] - 1e-7 * (1.0 + hi[j].abs().min(1e6)) || (p.integer[j] && u < hi[j]) {
                        hi[j] = u;
                        changed = true;
                        tightened += 1;
                    }
                } else {
                    let mut l = limit;
                    if p.integer[j] {
                        l = (l - 1e-9).ceil();
                    } else {
                        l -= 1e-9 * (1.0 + l.abs());
                    }
                    if l > lo[j] + 1e-7 * (1.0 + lo[j].abs().min(1e6)) || (p.integer[j] && l > lo[j]) {
                        lo[j] = l;
                        changed = true;
                        tightened += 1;
                    }
                }
                if lo[j] > hi[j] + 1e-9 {
                    infeasible = true;
                    break 'rounds;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for j in 0..p.n {
        if p.integer[j] && lo[j] > hi[j] && lo[j] - hi[j] <= 1e-9 {
            hi[j] = lo[j];
        }
    }
    let fixed = (0..p.n)
        .filter(|&j| p.integer[j] && lo[j] == hi[j] && p.lower[j] != p.upper[j])
        .count();
    Presolved {
        lower: lo,
        upper: hi,
        infeasible,
        fixed,
        tightened,
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    x: Vec<f64>,
    depth: usize,
    seq: usize,
}

fn relax(p: &Problem, lower: &[f64], upper: &[f64]) -> Result<SolveResult, SolveError> {
    let mut q = p.clone();
    q.lower = lower.to_vec();
    q.upper = upper.to_vec();
    q.integer = vec![false; p.n];
    solve_qp(&q)
}

/// Most fractional binary (ties to the lowest column), if any.
fn branching_column(p: &Problem, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..p.n {
        if !p.integer[j] {
            continue;
        }
        let frac = (x[j] - x[j].round()).abs();
        if frac <= tol {
            continue;
        }
        let dist = (x[j] - x[j].floor() - 0.5).abs();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((j, dist));
        }
    }
    best.map(|b| b.0)
}

/// Solves a mixed-binary LP/QP to proven optimality (or infeasibility).
/// Nodes are explored depth-first, lowest bound first among equal depths.
pub fn branch_and_bound(p: &Problem, opts: &BnbOptions) -> Result<(SolveResult, MipStats), SolveError> {
    p.validate().map_err(SolveError::InvalidProblem)?;
    let t0 = Instant::now();
    let mut stats = MipStats {
        presolve_enabled: opts.presolve,
        ..MipStats::default()
    };
    let mut trace = Vec::new();
    let infeasible = |stats: MipStats, trace: Vec<String>| {
        Ok((
            SolveResult {
                status: Status::Infeasible,
                x: Vec::new(),
                objective: f64::INFINITY,
                iterations: 0,
                trace,
            },
            stats,
        ))
    };
    let (lower, upper) = if opts.presolve {
        let pre = presolve(p);
        stats.presolve_fixed = pre.fixed;
        stats.presolve_tightened = pre.tightened;
        stats.presolve_time = t0.elapsed();
        if pre.infeasible {
            stats.solve_time = t0.elapsed();
            return infeasible(stats, trace);
        }
        (pre.lower, pre.upper)
    } else {
        (p.lower.clone(), p.upper.clone())
    };
    let tol = opts.integrality_tol;
    let mut iterations = 0;
    let root = relax(p, &lower, &upper)?;
    iterations += root.iterations;
    match root.status {
        Status::Optimal => {}
        Status::Infeasible => {
            stats.solve_time = t0.elapsed();
            return infeasible(stats, trace);
        }
        other => {
            stats.solve_time = t0.elapsed();
            return Ok((
                SolveResult {
                    status: other,
                    x: root.x,
                    objective: root.objective,
                    iterations,
                    trace,
                },
                stats,
            ));
        }
    }
    stats.root_objective = Some(root.objective);
    stats.root_integral = branching_column(p, &root.x, tol).is_none();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut seq = 0;
    let mut queue: Vec<Node> = Vec::new();
    let accept = |x: &[f64], obj: f64, lower: &[f64], upper: &[f64], incumbent: &mut Option<(f64, Vec<f64>)>, iterations: &mut usize| -> Result<bool, SolveError> {
        // snap binaries and re-solve the continuous part
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for j in 0..p.n {
            if p.integer[j] {
                lo[j] = x[j].round();
                hi[j] = lo[j];
            }
        }
        let polished = relax(p, &lo, &hi)?;
        *iterations += polished.iterations;
        let (obj, x) = if polished.is_optimal() {
            (polished.objective, polished.x)
        } else {
            (obj, x.to_vec())
        };
        if incumbent.as_ref().is_none_or(|(best, _)| obj < *best - 1e-9 * (1.0 + best.abs())) {
            *incumbent = Some((obj, x));
            return Ok(true);
        }
        Ok(false)
    };
    let prunes = |bound: f64, incumbent: &Option<(f64, Vec<f64>)>| {
        incumbent
            .as_ref()
            .is_some_and(|(best, _)| bound >= *best - 1e-9 * (1.0 + best.abs()))
    };

    if stats.root_integral {
        if accept(&root.x, root.objective, &lower, &upper, &mut incumbent, &mut iterations)? {
            stats.incumbent_updates += 1;
        }
    } else {
        queue.push(Node {
            lower,
            upper,
            bound: root.objective,
            x: root.x,
            depth: 0,
            seq,
        });
    }
    let mut hit_limit = false;
    while !queue.is_empty() && !(opts.first_incumbent && incumbent.is_some()) {
        let pick = (0..queue.len())
            .min_by(|&a, &b| {
                let (na, nb) = (&queue[a], &queue[b]);
                nb.depth
                    .cmp(&na.depth)
                    .then(na.bound.total_cmp(&nb.bound))
                    .then(na.seq.cmp(&nb.seq))
            })
            .expect("non-empty queue");
        let node = queue.swap_remove(pick);
        if prunes(node.bound, &incumbent) {
            continue;
        }
        if stats.node_count >= opts.node_limit {
            hit_limit = true;
            break;
        }
        let j = branching_column(p, &node.x, tol).expect("queued nodes are fractional");
        for value in [0.0, 1.0] {
            if value < node.lower[j] || value > node.upper[j] {
                continue;
            }
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            lo[j] = value;
            hi[j] = value;
            let r = relax(p, &lo, &hi)?;
            iterations += r.iterations;
            stats.node_count += 1;
            seq += 1;
            if opts.trace {
                trace.push(format!(
                    "node {seq} depth {} branch x{j}={value} status {:?} bound {}",
                    node.depth + 1,
                    r.status,
                    r.objective
                ));
            }
            if r.status != Status::Optimal || prunes(r.objective, &incumbent) {
                continue;
            }
            if branching_column(p, &r.x, tol).is_none() {
                if accept(&r.x, r.objective, &lo, &hi, &mut incumbent, &mut iterations)? {
                    stats.incumbent_updates += 1;
                    if opts.first_incumbent {
                        break;
                    }
                }
            } else {
                queue.push(Node {
                    lower: lo,
                    upper: hi,
                    bound: r.objective,
                    x: r.x,
                    depth: node.depth + 1,
                    seq,
                });
            }
        }
    }
    stats.solve_time = t0.elapsed();
    let status = if hit_limit {
        Status::NodeLimit
    } else if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let (objective, x) = incumbent.unwrap_or((f64::INFINITY, Vec::new()));
    Ok((
        SolveResult {
            status,
            x,
            objective,
            iterations,
            trace,
        },
        stats,
    ))
}
