//! The three solvers on hand-sized problems: an LP, a QP and a small binary
//! program solved by branch and bound.

use footstep::solve::{branch_and_bound, solve_lp, solve_qp, BnbOptions, Problem};

fn main() {
    // maximize 3x + 2y  s.t.  x + y <= 4, x + 3y <= 6, x <= 3, x, y >= 0
    let mut lp = Problem::new(2);
    lp.cost = vec![-3.0, -2.0];
    lp.add_le(&[(0, 1.0), (1, 1.0)], 4.0);
    lp.add_le(&[(0, 1.0), (1, 3.0)], 6.0);
    lp.set_bounds(0, 0.0, 3.0);
    lp.set_bounds(1, 0.0, f64::INFINITY);
    let r = solve_lp(&lp).unwrap();
    println!("lp:  {:?} x = {:?} objective {} ({} pivots)", r.status, r.x, r.objective, r.iterations);

    // closest point to (1, 2, 3) on the simplex x + y + z = 1, x >= 0
    let target = [1.0, 2.0, 3.0];
    let mut qp = Problem::new(3);
    for j in 0..3 {
        qp.add_hessian(j, j, 2.0);
        qp.cost[j] = -2.0 * target[j];
        qp.set_bounds(j, 0.0, f64::INFINITY);
    }
    qp.cost_constant = target.iter().map(|t| t * t).sum();
    qp.add_eq(&[(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
    let r = solve_qp(&qp).unwrap();
    println!("qp:  {:?} x = {:?} squared distance {}", r.status, r.x, r.objective);

    // knapsack: weights 5 4 3 2, values 10 7 5 3, capacity 9
    let (w, v) = ([5.0, 4.0, 3.0, 2.0], [10.0, 7.0, 5.0, 3.0]);
    let mut mip = Problem::new(4);
    for j in 0..4 {
        mip.cost[j] = -v[j];
        mip.set_bounds(j, 0.0, 1.0);
        mip.integer[j] = true;
    }
    let terms: Vec<(usize, f64)> = w.iter().copied().enumerate().collect();
    mip.add_le(&terms, 9.0);
    let (r, stats) = branch_and_bound(&mip, &BnbOptions::default()).unwrap();
    println!(
        "mip: {:?} x = {:?} value {} ({} nodes, {} fixed by presolve)",
        r.status,
        r.x.iter().map(|x| x.round()).collect::<Vec<_>>(),
        -r.objective,
        stats.node_count,
        stats.presolve_fixed
    );
}
