//! Numeric problem container shared by the LP, QP and branch-and-bound solvers.
//!
//! Problems are stated as
//!
//! ```text
//!     minimize     1/2 x' H x + c' x + c0
//!     subject to   A x <= b
//!                  E x  = e
//!                  l <= x <= u
//! ```
//!
//! with `H` optional (dense, symmetric positive semi-definite) and the rows of
//! `A` and `E` stored sparsely.

use serde::{Deserialize, Serialize};

/// Rows of a sparse linear system, one right-hand side per row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        SparseRows {
            start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Appends a row. Duplicate column entries are summed; exact zeros dropped.
    pub fn push(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let mut sorted: Vec<(usize, f64)> = terms.to_vec();
        sorted.sort_by_key(|t| t.0);
        let mut last: Option<usize> = None;
        for (c, v) in sorted {
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        // drop entries that cancelled to zero
        let s = *self.start.last().unwrap();
        let mut w = s;
        for r in s..self.cols.len() {
            if self.vals[r] != 0.0 {
                self.cols[w] = self.cols[r];
                self.vals[w] = self.vals[r];
                w += 1;
            }
        }
        self.cols.truncate(w);
        self.vals.truncate(w);
        self.start.push(w);
        self.rhs.push(rhs);
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[i], self.start[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    pub fn dot(&self, i: usize, x: &[f64]) -> f64 {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.vals
            .iter()
            .chain(self.rhs.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.vals.iter().chain(self.rhs.iter()).all(|v| v.is_finite())
    }

    pub fn max_column(&self) -> Option<usize> {
        self.cols.iter().copied().max()
    }
}

/// A continuous (or, with an integrality mask, mixed-binary) optimization problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Problem {
    pub n: usize,
    pub cost: Vec<f64>,
    pub cost_constant: f64,
    /// Dense row-major `n x n` Hessian of the objective, if quadratic.
    pub quadratic: Option<Vec<f64>>,
    pub ineq: SparseRows,
    pub eq: SparseRows,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl Problem {
    /// An unconstrained problem over `n` free variables with zero cost.
    pub fn new(n: usize) -> Self {
        Problem {
            n,
            cost: vec![0.0; n],
            cost_constant: 0.0,
            quadratic: None,
            ineq: SparseRows::new(),
            eq: SparseRows::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
        }
    }

    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64) {
        self.ineq.push(terms, rhs);
    }

    pub fn add_ge(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let neg: Vec<(usize, f64)> = terms.iter().map(|&(j, v)| (j, -v)).collect();
        self.ineq.push(&neg, -rhs);
    }

    pub fn add_eq(&mut self, terms: &[(usize, f64)], rhs: f64) {
        self.eq.push(terms, rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    /// Adds `scale * (x_i - x_j ...)` style quadratic entries: `H[i][j] += v`.
    pub fn add_hessian(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        let h = self.quadratic.get_or_insert_with(|| vec![0.0; n * n]);
        h[i * n + j] += v;
    }

    pub fn is_quadratic(&self) -> bool {
        self.quadratic
            .as_ref()
            .is_some_and(|h| h.iter().any(|&v| v != 0.0))
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut f = self.cost_constant + dot(&self.cost, x);
        if let Some(h) = &self.quadratic {
            let n = self.n;
            let mut q = 0.0;
            for i in 0..n {
                let row = &h[i * n..(i + 1) * n];
                let hx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                q += x[i] * hx;
            }
            f += 0.5 * q;
        }
        f
    }

    /// Gradient of the objective at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.cost.clone();
        if let Some(h) = &self.quadratic {
            let n = self.n;
            for (i, gi) in g.iter_mut().enumerate() {
                let row = &h[i * n..(i + 1) * n];
                *gi += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        g
    }

    /// Largest violation of any constraint or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..self.ineq.len() {
            v = v.max(self.ineq.dot(i, x) - self.ineq.rhs(i));
        }
        for i in 0..self.eq.len() {
            v = v.max((self.eq.dot(i, x) - self.eq.rhs(i)).abs());
        }
        for j in 0..self.n {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }

    /// Checks dimensions and finiteness of every coefficient.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        if self.cost.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err("vector lengths disagree with variable count".into());
        }
        if self.integer.len() != n {
            return Err("integrality mask length disagrees with variable count".into());
        }
        for rows in [&self.ineq, &self.eq] {
            if rows.max_column().is_some_and(|c| c >= n) {
                return Err("row references a column out of range".into());
            }
            if !rows.is_finite() {
                return Err("non-finite row coefficient".into());
            }
        }
        if !self.cost.iter().all(|v| v.is_finite()) {
            return Err("non-finite cost coefficient".into());
        }
        if let Some(h) = &self.quadratic {
            if h.len() != n * n || !h.iter().all(|v| v.is_finite()) {
                return Err("malformed quadratic term".into());
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(format!("empty bound interval on column {j}"));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_merges_duplicates_and_drops_zeros() {
        let mut rows = SparseRows::new();
        rows.push(&[(2, 1.0), (0, 3.0), (2, -1.0), (1, 0.5)], 4.0);
        let (c, v) = rows.row(0);
        assert_eq!(c, &[0, 1]);
        assert_eq!(v, &[3.0, 0.5]);
        assert_eq!(rows.dot(0, &[1.0, 2.0, 7.0]), 4.0);
    }

    #[test]
    fn objective_includes_quadratic_half() {
        let mut p = Problem::new(2);
        p.add_hessian(0, 0, 2.0);
        p.add_hessian(1, 1, 2.0);
        p.cost = vec![-2.0, -4.0];
        p.cost_constant = 5.0;
        // (x-1)^2 + (y-2)^2
        assert!((p.objective(&[1.0, 2.0])).abs() < 1e-15);
        assert!((p.objective(&[0.0, 0.0]) - 5.0).abs() < 1e-15);
    }
}
