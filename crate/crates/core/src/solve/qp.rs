//! Convex quadratic programming.
//!
//! The inner solver is the Goldfarb-Idnani dual active-set method, which needs
//! a positive definite Hessian. Footstep costs only touch the footstep
//! coordinates, so the Hessian is merely semi-definite; it is made definite by
//! a proximal term `rho/2 |x - x_k|^2` and the proximal center is iterated to
//! a fixed point, which is an exact minimizer of the original problem.

use super::problem::Problem;
use super::{SolveError, SolveResult, Status};

const VIOL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct QpOptions {
    pub max_iterations: usize,
    pub max_prox_rounds: usize,
    /// Proximal weight relative to the largest Hessian diagonal entry.
    pub prox_weight: f64,
    pub trace: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iterations: 100_000,
            max_prox_rounds: 200,
            prox_weight: 1e-5,
            trace: false,
        }
    }
}

/// Constraints `n'x >= b`, rows scaled to unit infinity norm.
struct Constraints {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    equality: Vec<bool>,
}

impl Constraints {
    fn build(p: &Problem) -> Constraints {
        let mut cs = Constraints {
            start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            b: Vec::new(),
            equality: Vec::new(),
        };
        for i in 0..p.eq.len() {
            let (c, v) = p.eq.row(i);
            cs.push(c, v, p.eq.rhs(i), true);
        }
        for i in 0..p.ineq.len() {
            let (c, v) = p.ineq.row(i);
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            cs.push(c, &neg, -p.ineq.rhs(i), false);
        }
        for j in 0..p.n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            if lo.is_finite() && hi.is_finite() && lo == hi {
                cs.push(&[j], &[1.0], lo, true);
                continue;
            }
            if lo.is_finite() {
                cs.push(&[j], &[1.0], lo, false);
            }
            if hi.is_finite() {
                cs.push(&[j], &[-1.0], -hi, false);
            }
        }
        cs
    }

    fn push(&mut self, cols: &[usize], vals: &[f64], b: f64, equality: bool) {
        let m = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        self.cols.extend_from_slice(cols);
        self.vals.extend(vals.iter().map(|v| v * s));
        self.start.push(self.cols.len());
        self.b.push(b * s);
        self.equality.push(equality);
    }

    fn len(&self) -> usize {
        self.b.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[i], self.start[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
    }
}

/// Goldfarb-Idnani state. `j` is row-major `n x n`, `r` row-major upper triangular.
struct DualActiveSet<'a> {
    n: usize,
    cons: &'a Constraints,
    j: Vec<f64>,
    r: Vec<f64>,
    active: Vec<(usize, f64)>, // (constraint, orientation sign)
    u: Vec<f64>,
    in_active: Vec<bool>,
    x: Vec<f64>,
    iterations: usize,
}

enum GiOutcome {
    Optimal,
    Infeasible,
    IterLimit,
}

/// Lower Cholesky factor of a dense SPD matrix.
fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, SolveError> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..=i {
            let mut s = a[i * n + k];
            for m in 0..k {
                s -= l[i * n + m] * l[k * n + m];
            }
            if i == k {
                if s <= 0.0 {
                    return Err(SolveError::NumericalBreakdown(
                        "Hessian not positive definite".into(),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + k] = s / l[k * n + k];
            }
        }
    }
    Ok(l)
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

impl<'a> DualActiveSet<'a> {
    /// Sets up the unconstrained minimizer of `1/2 x'Gx + g'x`.
    fn new(g_mat: &[f64], g: &[f64], cons: &'a Constraints) -> Result<Self, SolveError> {
        let n = g.len();
        let l = cholesky(g_mat, n)?;
        // J = L^{-T}: solve L^T J = I column by column (upper triangular result).
        let mut j = vec![0.0; n * n];
        for c in 0..n {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in i + 1..=c {
                    s -= l[k * n + i] * j[k * n + c];
                }
                j[i * n + c] = s / l[i * n + i];
            }
        }
        // x = -J J' g
        let mut jtg = vec![0.0; n];
        for (row, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            for c in row..n {
                // J is upper triangular: J[row][c] nonzero only for c >= row
                jtg[c] += j[row * n + c] * gr;
            }
        }
        let mut x = vec![0.0; n];
        for (row, xr) in x.iter_mut().enumerate() {
            let mut s = 0.0;
            for c in row..n {
                s += j[row * n + c] * jtg[c];
            }
            *xr = -s;
        }
        Ok(DualActiveSet {
            n,
            cons,
            j,
            r: vec![0.0; n * n],
            active: Vec::new(),
            u: Vec::new(),
            in_active: vec![false; cons.len()],
            x,
            iterations: 0,
        })
    }

    fn jt_times(&self, idx: usize, sign: f64, d: &mut [f64]) {
        let n = self.n;
        d.iter_mut().for_each(|v| *v = 0.0);
        let (c, v) = self.cons.row(idx);
        for (&row, &a) in c.iter().zip(v) {
            let coef = a * sign;
            let jr = &self.j[row * n..(row + 1) * n];
            for (di, &jv) in d.iter_mut().zip(jr) {
                *di += coef * jv;
            }
        }
    }

    fn add_constraint(&mut self, idx: usize, sign: f64, d: &mut [f64]) {
        let n = self.n;
        let q = self.active.len();
        for i in (q + 1..n).rev() {
            if d[i] == 0.0 {
                continue;
            }
            let (c, s, h) = givens(d[i - 1], d[i]);
            d[i - 1] = h;
            d[i] = 0.0;
            for row in 0..n {
                let a = self.j[row * n + i - 1];
                let b = self.j[row * n + i];
                self.j[row * n + i - 1] = c * a + s * b;
                self.j[row * n + i] = -s * a + c * b;
            }
        }
        for (i, &di) in d.iter().enumerate().take(q + 1) {
            self.r[i * n + q] = di;
        }
        self.active.push((idx, sign));
        self.in_active[idx] = true;
    }

    fn drop_constraint(&mut self, k: usize) {
        let n = self.n;
        let q = self.active.len();
        // shift columns k+1..q of R left by one
        for c in k..q - 1 {
            for i in 0..=c + 1 {
                self.r[i * n + c] = self.r[i * n + c + 1];
            }
        }
        for i in 0..n {
            self.r[i * n + q - 1] = 0.0;
        }
        // restore triangularity
        for i in k..q - 1 {
            let (c, s, h) = givens(self.r[i * n + i], self.r[(i + 1) * n + i]);
            self.r[i * n + i] = h;
            self.r[(i + 1) * n + i] = 0.0;
            for col in i + 1..q - 1 {
                let a = self.r[i * n + col];
                let b = self.r[(i + 1) * n + col];
                self.r[i * n + col] = c * a + s * b;
                self.r[(i + 1) * n + col] = -s * a + c * b;
            }
            for row in 0..n {
                let a = self.j[row * n + i];
                let b = self.j[row * n + i + 1];
                self.j[row * n + i] = c * a + s * b;
                self.j[row * n + i + 1] = -s * a + c * b;
            }
        }
        let (idx, _) = self.active.remove(k);
        self.u.remove(k);
        self.in_active[idx] = false;
    }

    fn most_violated(&self) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.cons.len() {
            if self.in_active[i] {
                continue;
            }
            let s = self.cons.value(i, &self.x) - self.cons.b[i];
            let (viol, sign) = if self.cons.equality[i] {
                (-s.abs(), if s > 0.0 { -1.0 } else { 1.0 })
            } else {
                (s, 1.0)
            };
            if viol < -VIOL_TOL && best.is_none_or(|b| viol < b.1) {
                best = Some((i, viol, sign));
            }
        }
        best
    }

    fn run(&mut self, max_iterations: usize) -> GiOutcome {
        let n = self.n;
        let mut d = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut rdir = vec![0.0; n];
        loop {
            let Some((p, _, sign)) = self.most_violated() else {
                return GiOutcome::Optimal;
            };
            let mut u_plus = 0.0;
            loop {
                self.iterations += 1;
                if self.iterations > max_iterations {
                    return GiOutcome::IterLimit;
                }
                let q = self.active.len();
                self.jt_times(p, sign, &mut d);
                // z = J2 d2
                z.iter_mut().for_each(|v| *v = 0.0);
                for row in 0..n {
                    let jr = &self.j[row * n..(row + 1) * n];
                    z[row] = jr[q..].iter().zip(&d[q..]).map(|(a, b)| a * b).sum();
                }
                // r = R^{-1} d1
                for i in (0..q).rev() {
                    let mut s = d[i];
                    for c in i + 1..q {
                        s -= self.r[i * n + c] * rdir[c];
                    }
                    rdir[i] = s / self.r[i * n + i];
                }
                // partial step
                let mut t1 = f64::INFINITY;
                let mut drop_k = None;
                for k in 0..q {
                    let (idx, _) = self.active[k];
                    if self.cons.equality[idx] || rdir[k] <= 1e-14 {
                        continue;
                    }
                    let t = self.u[k] / rdir[k];
                    if t < t1 {
                        t1 = t;
                        drop_k = Some(k);
                    }
                }
                // full step
                let d2sq: f64 = d[q..].iter().map(|v| v * v).sum();
                let dsq: f64 = d.iter().map(|v| v * v).sum();
                let s_p = sign * self.cons.value(p, &self.x) - sign * self.cons.b[p];
                let zn: f64 = d2sq;
                let t2 = if d2sq <= 1e-20 * dsq.max(1e-300) {
                    f64::INFINITY
                } else {
                    -s_p / zn
                };
                let t = t1.min(t2);
                if t.is_infinite() {
                    return GiOutcome::Infeasible;
                }
                if t2.is_finite() {
                    for (xi, zi) in self.x.iter_mut().zip(&z) {
                        *xi += t * zi;
                    }
                }
                for k in 0..q {
                    self.u[k] -= t * rdir[k];
                }
                u_plus += t;
                if t2 <= t1 {
                    // full step: constraint p becomes active
                    self.add_constraint(p, sign, &mut d);
                    self.u.push(u_plus);
                    break;
                }
                let k = drop_k.expect("partial step without a blocking multiplier");
                self.drop_constraint(k);
            }
        }
    }
}

/// Solves a convex QP. Falls back to the LP solver when the problem is linear.
pub fn solve_qp(p: &Problem) -> Result<SolveResult, SolveError> {
    solve_qp_with(p, &QpOptions::default())
}

pub fn solve_qp_with(p: &Problem, opts: &QpOptions) -> Result<SolveResult, SolveError> {
    p.validate().map_err(SolveError::InvalidProblem)?;
    if !p.is_quadratic() {
        return super::lp::solve_lp(p);
    }
    let n = p.n;
    let h = p.quadratic.clone().unwrap_or_else(|| vec![0.0; n * n]);
    for i in 0..n {
        for k in 0..i {
            if (h[i * n + k] - h[k * n + i]).abs() > 1e-9 * (1.0 + h[i * n + k].abs()) {
                return Err(SolveError::InvalidProblem("Hessian not symmetric".into()));
            }
        }
    }
    let cons = Constraints::build(p);
    let diag_max = (0..n).fold(0.0_f64, |m, i| m.max(h[i * n + i].abs()));
    let rho = opts.prox_weight * diag_max.max(1.0);
    let mut reg = h.clone();
    for i in 0..n {
        reg[i * n + i] += rho;
    }
    let mut center = vec![0.0; n];
    let mut iterations = 0;
    let mut trace = Vec::new();
    for round in 0..opts.max_prox_rounds {
        let g: Vec<f64> = p
            .cost
            .iter()
            .zip(&center)
            .map(|(c, xc)| c - rho * xc)
            .collect();
        let mut gi = DualActiveSet::new(&reg, &g, &cons)?;
        let outcome = gi.run(opts.max_iterations.saturating_sub(iterations));
        iterations += gi.iterations;
        if opts.trace {
            trace.push(format!(
                "prox {} iterations {} active {}",
                round,
                gi.iterations,
                gi.active.len()
            ));
        }
        match outcome {
            GiOutcome::Infeasible => {
                return Ok(SolveResult {
                    status: Status::Infeasible,
                    x: gi.x,
                    objective: f64::INFINITY,
                    iterations,
                    trace,
                })
            }
            GiOutcome::IterLimit => {
                return Ok(SolveResult {
                    status: Status::IterLimit,
                    objective: p.objective(&gi.x),
                    x: gi.x,
                    iterations,
                    trace,
                })
            }
            GiOutcome::Optimal => {}
        }
        let x = gi.x;
        let xmax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if xmax > super::lp::BOX {
            return Ok(SolveResult {
                status: Status::Unbounded,
                objective: f64::NEG_INFINITY,
                x,
                iterations,
                trace,
            });
        }
        let step = x
            .iter()
            .zip(&center)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        center = x;
        if round > 0 && step <= 1e-11 * (1.0 + xmax) {
            break;
        }
    }
    Ok(SolveResult {
        status: Status::Optimal,
        objective: p.objective(&center),
        x: center,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_least_squares() {
        let mut p = Problem::new(2);
        p.add_hessian(0, 0, 2.0);
        p.add_hessian(1, 1, 2.0);
        p.cost = vec![-2.0, -4.0];
        p.cost_constant = 5.0;
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 2.0).abs() < 1e-9);
        assert!(r.objective.abs() < 1e-12);
    }

    #[test]
    fn projection_onto_halfline() {
        // min x^2 s.t. x >= 3
        let mut p = Problem::new(1);
        p.add_hessian(0, 0, 2.0);
        p.add_ge(&[(0, 1.0)], 3.0);
        let r = solve_qp(&p).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-9);
        assert!((r.objective - 9.0).abs() < 1e-8);
    }

    #[test]
    fn semidefinite_with_equality() {
        // min (x - y)^2 s.t. x + y = 2, z free and absent from the cost
        let mut p = Problem::new(3);
        p.add_hessian(0, 0, 2.0);
        p.add_hessian(1, 1, 2.0);
        p.add_hessian(0, 1, -2.0);
        p.add_hessian(1, 0, -2.0);
        p.add_eq(&[(0, 1.0), (1, 1.0)], 2.0);
        p.add_le(&[(2, 1.0), (0, 1.0)], 5.0);
        let r = solve_qp(&p).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!(r.objective.abs() < 1e-12);
    }

    #[test]
    fn infeasible_qp() {
        let mut p = Problem::new(1);
        p.add_hessian(0, 0, 1.0);
        p.add_ge(&[(0, 1.0)], 2.0);
        p.add_le(&[(0, 1.0)], 1.0);
        assert_eq!(solve_qp(&p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn linear_cost_in_flat_direction_is_unbounded() {
        let mut p = Problem::new(2);
        p.add_hessian(0, 0, 1.0);
        p.cost = vec![0.0, -1.0];
        assert_eq!(solve_qp(&p).unwrap().status, Status::Unbounded);
    }
}
