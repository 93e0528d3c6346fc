//! Independent reference solvers used by the integration and acceptance tests.
//! Nothing here calls into the library's solvers.
#![allow(dead_code)]

pub mod layer;

use footstep::solve::Problem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves the dense square system `a x = b` by Gaussian elimination.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))?;
        if a[piv * n + c].abs() < 1e-10 {
            return None;
        }
        for k in 0..n {
            a.swap(c * n + k, piv * n + k);
        }
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            if f == 0.0 {
                continue;
            }
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}

/// A box-bounded LP `min c'x, A x <= b, lo <= x <= hi` in dense form.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub n: usize,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DenseLp {
    pub fn random(rng: &mut ChaCha8Rng, n: usize, m: usize, feasible: bool) -> DenseLp {
        let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..-0.5)).collect();
        let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b = a
            .iter()
            .map(|row: &Vec<f64>| {
                let norm: f64 = row.iter().map(|v| v.abs()).sum();
                if feasible {
                    rng.gen_range(0.05..1.0) * norm.max(0.1)
                } else {
                    rng.gen_range(-1.0..1.0) * norm
                }
            })
            .collect();
        DenseLp { n, c, a, b, lo, hi }
    }

    pub fn to_problem(&self) -> Problem {
        let mut p = Problem::new(self.n);
        p.cost = self.c.clone();
        for (row, &rhs) in self.a.iter().zip(&self.b) {
            let terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            p.add_le(&terms, rhs);
        }
        for j in 0..self.n {
            p.set_bounds(j, self.lo[j], self.hi[j]);
        }
        p
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let tol = 1e-9;
        (0..self.n).all(|j| x[j] >= self.lo[j] - tol && x[j] <= self.hi[j] + tol)
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(r, &b)| r.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() <= b + tol)
    }

    /// Optimal value by enumerating every vertex: `k` active general rows,
    /// `k` free coordinates, the remaining coordinates at a bound.
    pub fn vertex_enumeration(&self) -> Option<f64> {
        let n = self.n;
        let m = self.a.len();
        let mut best: Option<f64> = None;
        for k in 0..=m.min(n) {
            for rows in subsets(m, k) {
                for free in subsets(n, k) {
                    let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();
                    for mask in 0..(1u32 << fixed.len()) {
                        let mut x = vec![0.0; n];
                        for (t, &j) in fixed.iter().enumerate() {
                            x[j] = if mask >> t & 1 == 1 { self.hi[j] } else { self.lo[j] };
                        }
                        if k > 0 {
                            let mut mat = vec![0.0; k * k];
                            let mut rhs = vec![0.0; k];
                            for (ri, &r) in rows.iter().enumerate() {
                                rhs[ri] = self.b[r]
                                    - fixed.iter().map(|&j| self.a[r][j] * x[j]).sum::<f64>();
                                for (ci, &j) in free.iter().enumerate() {
                                    mat[ri * k + ci] = self.a[r][j];
                                }
                            }
                            let Some(sol) = dense_solve(mat, rhs, k) else { continue };
                            for (ci, &j) in free.iter().enumerate() {
                                x[j] = sol[ci];
                            }
                        }
                        if self.feasible(&x) {
                            let f: f64 = self.c.iter().zip(&x).map(|(a, b)| a * b).sum();
                            best = Some(best.map_or(f, |b: f64| b.min(f)));
                        }
                    }
                }
            }
        }
        best
    }
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// A strictly convex QP `min 1/2 x'Hx + c'x, A x <= b` with a known interior point.
#[derive(Clone, Debug)]
pub struct DenseQp {
    pub n: usize,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl DenseQp {
    pub fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseQp {
        let k = rng.gen_range(1..=n);
        let g: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = (0..k).map(|r| g[r * n + i] * g[r * n + j]).sum::<f64>();
            }
            h[i * n + i] += 0.05;
        }
        let c = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let b = a
            .iter()
            .map(|r: &Vec<f64>| {
                r.iter().zip(&x0).map(|(p, q)| p * q).sum::<f64>() + rng.gen_range(0.0..0.5)
            })
            .collect();
        DenseQp { n, h, c, a, b }
    }

    pub fn to_problem(&self) -> Problem {
        let mut p = Problem::new(self.n);
        p.cost = self.c.clone();
        p.quadratic = Some(self.h.clone());
        for (row, &rhs) in self.a.iter().zip(&self.b) {
            let terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            p.add_le(&terms, rhs);
        }
        p
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut f: f64 = self.c.iter().zip(x).map(|(a, b)| a * b).sum();
        for i in 0..n {
            for j in 0..n {
                f += 0.5 * x[i] * self.h[i * n + j] * x[j];
            }
        }
        f
    }

    /// Accelerated projected gradient on the dual `max_{l >= 0} q(l)`,
    /// returning the recovered primal minimizer.
    pub fn projected_gradient(&self, iters: usize) -> Vec<f64> {
        let n = self.n;
        let m = self.a.len();
        // H^{-1} by solving against unit vectors.
        let mut hinv = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = dense_solve(self.h.clone(), e, n).expect("H is definite");
            for i in 0..n {
                hinv[i * n + j] = col[i];
            }
        }
        let primal = |lam: &[f64]| -> Vec<f64> {
            let mut g = self.c.clone();
            for (r, &l) in self.a.iter().zip(lam) {
                for j in 0..n {
                    g[j] += r[j] * l;
                }
            }
            (0..n)
                .map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>())
                .collect()
        };
        // Lipschitz constant of the dual gradient: |A H^{-1} A'| (Frobenius bound).
        let mut lip = 0.0;
        for r1 in &self.a {
            for r2 in &self.a {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += r1[i] * hinv[i * n + j] * r2[j];
                    }
                }
                lip += s * s;
            }
        }
        let step = 1.0 / lip.sqrt().max(1e-12);
        let mut lam = vec![0.0; m];
        let mut y = lam.clone();
        let mut t: f64 = 1.0;
        for _ in 0..iters {
            let x = primal(&y);
            let mut next = vec![0.0; m];
            for (i, r) in self.a.iter().enumerate() {
                let grad = r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - self.b[i];
                next[i] = (y[i] + step * grad).max(0.0);
            }
            let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            for i in 0..m {
                y[i] = next[i] + (t - 1.0) / tn * (next[i] - lam[i]);
            }
            lam = next;
            t = tn;
        }
        primal(&lam)
    }
}

// ---------------------------------------------------------------------------
// scenario fixtures and geometric oracles

use footstep::geometry::{Scene, Vec3};
use footstep::guide::StepSchedule;
use footstep::pipeline::{plan_schedule, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, Scenario, SceneSpec};
use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::SeedableRng;

pub fn scenario(name: &str) -> Scenario {
    generate_scene(&SceneSpec::from_name(name).expect("known generator")).expect("generated scene")
}

/// Guide-pruned biped schedule of a generated scene (seed 42).
pub fn pruned_schedule(name: &str) -> (Scenario, StepSchedule) {
    let sc = scenario(name);
    let q = PlanQuery::from_scenario(&sc, RobotModel::biped());
    let (schedule, _) = plan_schedule(&q).expect("guide succeeds");
    (sc, schedule)
}

/// A small selection problem the brute-force oracle can enumerate.
pub struct Desk {
    pub name: String,
    pub scene: Scene,
    pub model: RobotModel,
    pub schedule: StepSchedule,
}

pub const DESK_MAX_STEPS: usize = 8;
pub const DESK_MAX_CANDIDATES: usize = 4;

/// Pruned schedules of small stairs and rubble scenes, each also with an
/// extra distractor surface per step and with one step's candidates swapped
/// for unreachable ones (often infeasible).
pub fn desk_suite() -> Vec<Desk> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut names: Vec<String> = vec!["stairs3".into(), "stairs4".into()];
    names.extend((1..=5).map(|k| format!("stairs3:{k}")));
    names.extend((1..=3).map(|k| format!("stairs4:{k}")));
    names.extend((1..=6).map(|k| format!("rubbles9:{k}")));
    let mut out = Vec::new();
    for name in names {
        let (sc, mut base) = pruned_schedule(&name);
        if base.len() > DESK_MAX_STEPS {
            continue;
        }
        let m = sc.scene.len();
        for st in &mut base.steps {
            if st.candidates.len() > DESK_MAX_CANDIDATES {
                st.candidates.shuffle(&mut rng);
                st.candidates.truncate(DESK_MAX_CANDIDATES);
                st.candidates.sort_unstable();
            }
        }

        let mut extra = base.clone();
        for i in 0..extra.len() {
            let st = &mut extra.steps[i];
            if st.candidates.len() >= DESK_MAX_CANDIDATES {
                continue;
            }
            let others: Vec<usize> = (0..m).filter(|j| !st.candidates.contains(j)).collect();
            if let Some(&j) = others.choose(&mut rng) {
                st.candidates.push(j);
                st.candidates.sort_unstable();
            }
            if extra.combinations() > 1500.0 {
                let st = &mut extra.steps[i];
                st.candidates = base.steps[i].candidates.clone();
                break;
            }
        }

        let mut swapped = base.clone();
        let i = rng.gen_range(0..swapped.len());
        let st = &mut swapped.steps[i];
        let mut others: Vec<usize> = (0..m).filter(|j| !st.candidates.contains(j)).collect();
        others.shuffle(&mut rng);
        others.truncate(rng.gen_range(1..=2));
        others.sort_unstable();
        if !others.is_empty() {
            st.candidates = others;
        }

        for (tag, schedule) in [("", base), ("+extra", extra), ("+swap", swapped)] {
            out.push(Desk {
                name: format!("{name}{tag}"),
                scene: sc.scene.clone(),
                model: RobotModel::biped(),
                schedule,
            });
        }
    }
    out
}

/// Minimum time of a double integrator from `(x0, v0)` to `(x1, v1)` with
/// `|a| <= amax` and `|v| <= vmax`, the least duration over every
/// bang-bang and bang-cruise-bang profile that is consistent.
pub fn min_time_1d(x0: f64, v0: f64, x1: f64, v1: f64, amax: f64, vmax: f64) -> f64 {
    let dx = x1 - x0;
    let eps = 1e-12;
    let mut best = f64::INFINITY;
    for s in [1.0, -1.0] {
        let sq = s * amax * dx + 0.5 * (v0 * v0 + v1 * v1);
        if sq >= 0.0 {
            let vp = s * sq.sqrt();
            let t1 = (vp - v0) / (s * amax);
            let t2 = (vp - v1) / (s * amax);
            if t1 >= -eps && t2 >= -eps && vp.abs() <= vmax + eps {
                best = best.min(t1.max(0.0) + t2.max(0.0));
            }
        }
        let vc = s * vmax;
        let t1 = (vc - v0) / (s * amax);
        let t3 = (vc - v1) / (s * amax);
        let d1 = 0.5 * (v0 + vc) * t1;
        let d3 = 0.5 * (vc + v1) * t3;
        let tc = (dx - d1 - d3) / vc;
        if t1 >= -eps && t3 >= -eps && tc >= -eps {
            best = best.min(t1.max(0.0) + tc.max(0.0) + t3.max(0.0));
        }
    }
    best
}

/// `R_min(z -> n) * R_z(yaw)` by the Rodrigues formula.
pub fn frame(yaw: f64, n: &Vec3) -> Matrix3<f64> {
    let n = n.normalize();
    let (s, c) = yaw.sin_cos();
    let rz = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    let axis = Vec3::z().cross(&n);
    let sin = axis.norm();
    if sin < 1e-15 {
        return rz;
    }
    let k = axis / sin;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    let rmin = Matrix3::identity() + kx * sin + kx * kx * (1.0 - n.z);
    rmin * rz
}

/// Whether `q` is inside the convex hull of `pts`, `None` within `margin` of
/// its boundary. Uses every supporting line through two of the points.
pub fn in_convex_hull_2d(pts: &[[f64; 2]], q: [f64; 2], margin: f64) -> Option<bool> {
    let mut depth = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let (a, b) = (pts[i], pts[j]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len = ex.hypot(ey);
            if len < 1e-12 {
                continue;
            }
            let side = |p: [f64; 2]| (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len;
            if pts.iter().all(|&p| side(p) >= -1e-12) {
                depth = depth.min(side(q));
            }
        }
    }
    if depth.abs() <= margin {
        None
    } else {
        Some(depth > 0.0)
    }
}

// ---------------------------------------------------------------------------
// plan checks independent of the library's verifier

use footstep::pipeline::FootstepPlan;

/// Largest deviation of each quadruped COM waypoint (xy) from the crawl
/// average of the feet on the ground: 1/3 on the three supports before
/// touchdown, 1/4 on all four feet after.
pub fn crawl_com_residual(plan: &FootstepPlan) -> f64 {
    let mut feet: Vec<Vec3> = plan.schedule.initial.iter().map(|f| f.position).collect();
    let mut worst = 0.0f64;
    for (step, com) in plan.steps.iter().zip(&plan.com) {
        feet[step.effector] = step.position;
        for ax in 0..2 {
            let pre: f64 = (0..4).filter(|&e| e != step.effector).map(|e| feet[e][ax]).sum::<f64>() / 3.0;
            let post: f64 = feet.iter().map(|f| f[ax]).sum::<f64>() / 4.0;
            worst = worst.max((com[0][ax] - pre).abs()).max((com[1][ax] - post).abs());
        }
    }
    worst
}

/// Problems found in a plan: steps off their surface or outside the
/// candidate list, wrong gait, or a reported cost that is not the travel cost.
pub fn plan_violations(plan: &FootstepPlan, scene: &Scene, model: &RobotModel) -> Vec<String> {
    let mut out = Vec::new();
    if plan.steps.len() != plan.schedule.len() || plan.com.len() != plan.schedule.len() {
        return vec!["step count differs from the schedule".into()];
    }
    let mut prev: Vec<Vec3> = plan.schedule.initial.iter().map(|f| f.position).collect();
    let mut cost = 0.0;
    for (i, (st, sch)) in plan.steps.iter().zip(&plan.schedule.steps).enumerate() {
        if st.effector != sch.effector || !sch.candidates.contains(&st.surface) {
            out.push(format!("step {i}: effector or surface not scheduled"));
        }
        let v = scene.surface(st.surface).vertices();
        let mut n = (v[1] - v[0]).cross(&(v[2] - v[0])).normalize();
        if n.z < 0.0 {
            n = -n;
        }
        let off_plane = n.dot(&(st.position - v[0])).abs();
        if off_plane > 1e-6 {
            out.push(format!("step {i}: {off_plane:e} off the surface plane"));
        }
        let loop_xy: Vec<[f64; 2]> = v.iter().map(|p| [p.x, p.y]).collect();
        if in_convex_hull_2d(&loop_xy, [st.position.x, st.position.y], 1e-7) == Some(false) {
            out.push(format!("step {i}: outside surface {}", st.surface));
        }
        cost += (st.position - prev[st.effector]).norm_squared();
        prev[st.effector] = st.position;
    }
    if (cost - plan.cost).abs() > 1e-6 * cost.max(1.0) {
        out.push(format!("cost {} reported, {cost} recomputed", plan.cost));
    }
    if model.n_feet == 4 {
        let r = crawl_com_residual(plan);
        if r > 1e-9 {
            out.push(format!("crawl COM residual {r:e}"));
        }
    }
    out
}
