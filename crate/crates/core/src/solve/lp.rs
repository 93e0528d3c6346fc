//! Dense revised simplex for linear programs.
//!
//! The problem `min c'x s.t. G x <= h` over free `x` is solved through its dual
//! `min h'y s.t. G'y = -c, y >= 0`, a standard-form program with one row per
//! primal variable. A basis of the dual is a set of `n` primal rows; its simplex
//! multipliers are the primal vertex where those rows are active, and a negative
//! reduced cost is a violated primal row. The basis inverse is therefore only
//! `n x n`, which keeps the footstep programs (a few hundred columns and
//! thousands of rows) cheap.
//!
//! Infinite variable bounds are replaced by a wide box so the all-bounds basis
//! is always dual feasible and no phase one is needed. A basic box row with a
//! positive multiplier at the optimum means the primal is unbounded.

use super::problem::{dot, Problem};
use super::{SolveError, SolveResult, Status};

/// Half-width of the artificial box replacing infinite bounds.
pub const BOX: f64 = 1.0e6;

#[derive(Clone, Debug)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    /// Relative size of the deterministic cost perturbation (0 disables it).
    pub perturbation: f64,
    pub trace: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: 200_000,
            bland_after: 50,
            refactor_every: 100,
            perturbation: 1e-9,
            trace: false,
        }
    }
}

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
enum RowKind {
    Ineq,
    Eq,
    Bound,
    Box,
}

/// All primal rows `g_i x <= h_i`, each scaled to unit infinity norm.
struct RowSet {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    h: Vec<f64>,
    scale: Vec<f64>,
    kind: Vec<RowKind>,
}

impl RowSet {
    fn build(p: &Problem) -> RowSet {
        let mut rs = RowSet {
            start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            h: Vec::new(),
            scale: Vec::new(),
            kind: Vec::new(),
        };
        // Bound rows first: the initial basis indexes them directly.
        for j in 0..p.n {
            let (hi, kind) = if p.upper[j].is_finite() {
                (p.upper[j], RowKind::Bound)
            } else {
                (BOX, RowKind::Box)
            };
            rs.push_row(&[j], &[1.0], hi, kind);
            let (lo, kind) = if p.lower[j].is_finite() {
                (-p.lower[j], RowKind::Bound)
            } else {
                (BOX, RowKind::Box)
            };
            rs.push_row(&[j], &[-1.0], lo, kind);
        }
        for i in 0..p.ineq.len() {
            let (c, v) = p.ineq.row(i);
            rs.push_row(c, v, p.ineq.rhs(i), RowKind::Ineq);
        }
        for i in 0..p.eq.len() {
            let (c, v) = p.eq.row(i);
            rs.push_row(c, v, p.eq.rhs(i), RowKind::Eq);
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            rs.push_row(c, &neg, -p.eq.rhs(i), RowKind::Eq);
        }
        rs
    }

    fn push_row(&mut self, cols: &[usize], vals: &[f64], h: f64, kind: RowKind) {
        let m = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        self.cols.extend_from_slice(cols);
        self.vals.extend(vals.iter().map(|v| v * s));
        self.start.push(self.cols.len());
        self.h.push(h * s);
        self.scale.push(s);
        self.kind.push(kind);
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[i], self.start[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    fn slack(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        self.h[i] - c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum::<f64>()
    }
}

struct Simplex<'a> {
    n: usize,
    rows: &'a RowSet,
    cost: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    y: Vec<f64>,
    x: Vec<f64>,
    iterations: usize,
    trace: Option<Vec<String>>,
}

enum Outcome {
    Optimal,
    Infeasible,
    IterLimit,
}

impl<'a> Simplex<'a> {
    fn new(rows: &'a RowSet, cost: Vec<f64>, trace: bool) -> Self {
        let n = cost.len();
        let mut basis = Vec::with_capacity(n);
        let mut binv = vec![0.0; n * n];
        for j in 0..n {
            // Row 2j is +x_j <= ., row 2j+1 is -x_j <= .; pick the one making y >= 0.
            if cost[j] <= 0.0 {
                basis.push(2 * j);
                binv[j * n + j] = 1.0;
            } else {
                basis.push(2 * j + 1);
                binv[j * n + j] = -1.0;
            }
        }
        let mut in_basis = vec![false; rows.len()];
        for &b in &basis {
            in_basis[b] = true;
        }
        let mut s = Simplex {
            n,
            rows,
            cost,
            basis,
            in_basis,
            binv,
            y: vec![0.0; n],
            x: vec![0.0; n],
            iterations: 0,
            trace: trace.then(Vec::new),
        };
        s.compute_y();
        s.compute_x();
        s
    }

    fn compute_y(&mut self) {
        let n = self.n;
        for k in 0..n {
            let row = &self.binv[k * n..(k + 1) * n];
            self.y[k] = -dot(row, &self.cost);
        }
    }

    fn compute_x(&mut self) {
        let n = self.n;
        self.x.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            let hb = self.rows.h[self.basis[k]];
            if hb == 0.0 {
                continue;
            }
            let row = &self.binv[k * n..(k + 1) * n];
            for (xj, b) in self.x.iter_mut().zip(row) {
                *xj += b * hb;
            }
        }
    }

    /// Rebuilds the basis inverse from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<(), SolveError> {
        let n = self.n;
        // B[:, k] = g_{basis[k]}'
        let mut b = vec![0.0; n * n];
        for (k, &r) in self.basis.iter().enumerate() {
            let (c, v) = self.rows.row(r);
            for (&j, &a) in c.iter().zip(v) {
                b[j * n + k] = a;
            }
        }
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        for col in 0..n {
            let mut piv = col;
            let mut best = b[col * n + col].abs();
            for r in col + 1..n {
                let v = b[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(SolveError::NumericalBreakdown(
                    "singular simplex basis".into(),
                ));
            }
            if piv != col {
                for c in 0..n {
                    b.swap(col * n + c, piv * n + c);
                    inv.swap(col * n + c, piv * n + c);
                }
            }
            let d = b[col * n + col];
            for c in 0..n {
                b[col * n + c] /= d;
                inv[col * n + c] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = b[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for c in 0..n {
                    b[r * n + c] -= f * b[col * n + c];
                    inv[r * n + c] -= f * inv[col * n + c];
                }
            }
        }
        self.binv = inv;
        self.compute_y();
        self.compute_x();
        Ok(())
    }

    fn run(&mut self, opts: &LpOptions, budget: usize) -> Result<Outcome, SolveError> {
        let n = self.n;
        let m = self.rows.len();
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        let mut careful = 0usize;
        let mut checkpoint = self.basis.clone();
        let mut d = vec![0.0; n];
        loop {
            if self.iterations >= budget {
                return Ok(Outcome::IterLimit);
            }
            let bland = degenerate_run >= opts.bland_after;
            // Pricing: most violated primal row (Bland: lowest violated index).
            let mut enter = None;
            let mut best = -FEAS_TOL;
            for i in 0..m {
                if self.in_basis[i] {
                    continue;
                }
                let r = self.rows.slack(i, &self.x);
                if r < best {
                    enter = Some(i);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(q) = enter else {
                return Ok(Outcome::Optimal);
            };
            // d = Binv g_q'
            d.iter_mut().for_each(|v| *v = 0.0);
            let (qc, qv) = self.rows.row(q);
            for (&j, &a) in qc.iter().zip(qv) {
                for k in 0..n {
                    d[k] += self.binv[k * n + j] * a;
                }
            }
            // Ratio test on the dual basic variables: Harris two-pass, keeping
            // the largest pivot among near-minimal ratios (Bland: lowest index).
            let dmax = d.iter().fold(0.0_f64, |m, v| m.max(*v));
            let tol = PIVOT_TOL.max(1e-9 * dmax);
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            if bland {
                for k in 0..n {
                    if d[k] <= tol {
                        continue;
                    }
                    let t = self.y[k].max(0.0) / d[k];
                    let better = match leave {
                        None => true,
                        Some(l) => t < theta - 1e-12 || (t <= theta + 1e-12 && self.basis[k] < self.basis[l]),
                    };
                    if better {
                        leave = Some(k);
                        theta = t;
                    }
                }
            } else {
                let mut bound = f64::INFINITY;
                for k in 0..n {
                    if d[k] > tol {
                        bound = bound.min((self.y[k].max(0.0) + HARRIS_TOL) / d[k]);
                    }
                }
                for k in 0..n {
                    if d[k] <= tol {
                        continue;
                    }
                    let t = self.y[k].max(0.0) / d[k];
                    if t <= bound && leave.is_none_or(|l| d[k] > d[l]) {
                        leave = Some(k);
                    }
                }
                if let Some(l) = leave {
                    theta = self.y[l].max(0.0) / d[l];
                }
            }
            let Some(l) = leave else {
                return Ok(Outcome::Infeasible);
            };
            if let Some(tr) = self.trace.as_mut() {
                tr.push(format!(
                    "pivot {} enter {} leave {} step {:.6e}{}",
                    self.iterations,
                    q,
                    self.basis[l],
                    theta,
                    if bland { " bland" } else { "" }
                ));
            }
            if theta <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            // Update dual basic values.
            for k in 0..n {
                self.y[k] -= theta * d[k];
            }
            self.y[l] = theta;
            // Eta update of the inverse.
            let piv = d[l];
            for c in 0..n {
                self.binv[l * n + c] /= piv;
            }
            for k in 0..n {
                if k == l || d[k] == 0.0 {
                    continue;
                }
                let f = d[k];
                for c in 0..n {
                    self.binv[k * n + c] -= f * self.binv[l * n + c];
                }
            }
            self.in_basis[self.basis[l]] = false;
            self.in_basis[q] = true;
            self.basis[l] = q;
            self.iterations += 1;
            since_refactor += 1;
            if careful > 0 || since_refactor >= opts.refactor_every {
                careful = careful.saturating_sub(1);
                match self.refactor() {
                    Ok(()) => checkpoint.clone_from(&self.basis),
                    Err(e) if careful > 0 || checkpoint == self.basis => return Err(e),
                    Err(_) => {
                        // drifted into a singular basis: back off and pivot on fresh inverses
                        for &r in &self.basis {
                            self.in_basis[r] = false;
                        }
                        self.basis.clone_from(&checkpoint);
                        for &r in &self.basis {
                            self.in_basis[r] = true;
                        }
                        self.refactor()?;
                        careful = 2 * opts.refactor_every;
                    }
                }
                since_refactor = 0;
            } else {
                self.compute_x();
            }
        }
    }
}

fn perturbed_cost(c: &[f64], rel: f64) -> Vec<f64> {
    if rel == 0.0 {
        return c.to_vec();
    }
    let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    c.iter()
        .enumerate()
        .map(|(j, &v)| {
            // Weyl sequence in [0.5, 1.0): deterministic and distinct per column.
            let u = ((j as f64 + 1.0) * 0.618_033_988_749_895).fract();
            v + rel * scale * (0.5 + 0.5 * u)
        })
        .collect()
}

/// Solves a linear program (the quadratic term and integrality mask are ignored).
pub fn solve_lp(p: &Problem) -> Result<SolveResult, SolveError> {
    solve_lp_with(p, &LpOptions::default())
}

pub fn solve_lp_with(p: &Problem, opts: &LpOptions) -> Result<SolveResult, SolveError> {
    p.validate().map_err(SolveError::InvalidProblem)?;
    let rows = RowSet::build(p);
    if p.n == 0 {
        let feasible = (0..rows.len()).all(|i| rows.h[i] >= -FEAS_TOL);
        return Ok(SolveResult {
            status: if feasible { Status::Optimal } else { Status::Infeasible },
            x: vec![],
            objective: p.cost_constant,
            iterations: 0,
            trace: vec![],
        });
    }

    let mut attempts = vec![opts.perturbation];
    if opts.perturbation != 0.0 {
        attempts.push(0.0);
    }
    let mut total_iters = 0;
    let mut trace = Vec::new();
    for rel in attempts {
        let mut s = Simplex::new(&rows, perturbed_cost(&p.cost, rel), opts.trace);
        let outcome = s.run(opts, opts.max_iterations.saturating_sub(total_iters))?;
        total_iters += s.iterations;
        if let Some(t) = s.trace.take() {
            trace.extend(t);
        }
        match outcome {
            Outcome::IterLimit => {
                return Ok(SolveResult {
                    status: Status::IterLimit,
                    objective: p.objective(&s.x),
                    x: s.x,
                    iterations: total_iters,
                    trace,
                })
            }
            Outcome::Infeasible => {
                return Ok(SolveResult {
                    status: Status::Infeasible,
                    x: s.x,
                    objective: f64::INFINITY,
                    iterations: total_iters,
                    trace,
                })
            }
            Outcome::Optimal => {}
        }
        s.refactor()?;
        // Certify against the true cost: the basis must stay dual feasible.
        s.cost = p.cost.clone();
        s.compute_y();
        let ymin = s.y.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let cscale = p.cost.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if ymin < -DUAL_TOL * cscale && rel != 0.0 {
            continue;
        }
        let primal_res = primal_residual(&rows, &s.x);
        if primal_res > 1e-7 {
            return Err(SolveError::NumericalBreakdown(format!(
                "primal residual {primal_res:.3e} after refactorization"
            )));
        }
        let unbounded = s
            .basis
            .iter()
            .zip(&s.y)
            .any(|(&r, &y)| rows.kind[r] == RowKind::Box && y > DUAL_TOL * cscale);
        let x = s.x;
        return Ok(SolveResult {
            status: if unbounded { Status::Unbounded } else { Status::Optimal },
            objective: p.objective(&x),
            x,
            iterations: total_iters,
            trace,
        });
    }
    Err(SolveError::NumericalBreakdown(
        "basis not dual feasible after perturbation removal".into(),
    ))
}

/// Largest violation of the original (unscaled) rows.
fn primal_residual(rows: &RowSet, x: &[f64]) -> f64 {
    (0..rows.len())
        .map(|i| (-rows.slack(i, x)) / rows.scale[i])
        .fold(0.0_f64, f64::max)
}
