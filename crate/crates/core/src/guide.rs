//! Root-trajectory planning: double-integrator minimum-time steering, a
//! kinodynamic RRT, trajectory validation and discretization into steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::format_number;
use crate::geometry::{RigidTransform, Scene, Vec3};
use crate::reachability::{candidate_surfaces, has_candidate, ReachError};
use crate::scenario::{RobotModel, RootPose};

pub const GRAVITY: f64 = 9.81;
/// Validation sampling period (s).
pub const SAMPLE_DT: f64 = 0.02;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GuideError {
    #[error("steering infeasible: axis {axis} cannot be synchronized")]
    Infeasible { axis: usize },
    #[error("no trajectory found after {iterations} iterations")]
    NotFound { iterations: usize },
    #[error("start state is invalid: {0}")]
    InvalidStart(String),
    #[error("step {step}: no reachable surface for effector {effector}")]
    EmptyCandidates { step: usize, effector: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Root pose (roll and pitch zero) with a colocated COM and its velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootState {
    pub position: Vec3,
    pub yaw: f64,
    pub velocity: Vec3,
}

impl RootState {
    pub fn new(position: Vec3, yaw: f64, velocity: Vec3) -> Self {
        RootState { position, yaw, velocity }
    }

    /// A resting state above the terrain at the model's nominal height.
    pub fn at_rest(pose: &RootPose, scene: &Scene, model: &RobotModel) -> Self {
        let z = scene.height_under(pose.x, pose.y) + model.nominal_height;
        RootState::new(Vec3::new(pose.x, pose.y, z), pose.yaw, Vec3::zeros())
    }

    pub fn pose(&self) -> RigidTransform {
        RigidTransform::from_yaw(self.position, self.yaw)
    }

    pub fn com(&self) -> Vec3 {
        self.position
    }

    pub fn root_pose(&self) -> RootPose {
        RootPose::new(self.position.x, self.position.y, self.yaw)
    }
}

/// Piecewise-constant acceleration profile along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisProfile {
    pub x0: f64,
    pub v0: f64,
    /// `(duration, acceleration)` pieces.
    pub pieces: Vec<(f64, f64)>,
}

impl AxisProfile {
    pub fn duration(&self) -> f64 {
        self.pieces.iter().map(|p| p.0).sum()
    }

    /// Position, velocity and acceleration at `t`; constant velocity past the end.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (mut x, mut v) = (self.x0, self.v0);
        let mut left = t.max(0.0);
        for &(d, a) in &self.pieces {
            if left <= d {
                return (x + v * left + 0.5 * a * left * left, v + a * left, a);
            }
            x += v * d + 0.5 * a * d * d;
            v += a * d;
            left -= d;
        }
        (x + v * left, v, 0.0)
    }
}

/// Minimum-time profile from `(x0, v0)` to `(x1, v1)` with acceleration
/// bound `a` and velocity bound `vmax`.
pub fn min_time_profile(x0: f64, v0: f64, x1: f64, v1: f64, a: f64, vmax: f64) -> AxisProfile {
    let dx = x1 - x0;
    let mut pieces = Vec::new();
    let dv = v1 - v0;
    let t_direct = dv.abs() / a;
    let d_direct = 0.5 * (v0 + v1) * t_direct;
    if dx == d_direct {
        if t_direct > 0.0 {
            pieces.push((t_direct, dv.signum() * a));
        }
        return AxisProfile { x0, v0, pieces };
    }
    let s = if dx > d_direct { 1.0 } else { -1.0 };
    let peak2 = s * a * dx + 0.5 * (v0 * v0 + v1 * v1);
    let peak = s * peak2.max(0.0).sqrt();
    if peak.abs() <= vmax {
        let t1 = ((peak - v0) * s / a).max(0.0);
        let t2 = ((peak - v1) * s / a).max(0.0);
        pieces.push((t1, s * a));
        pieces.push((t2, -s * a));
    } else {
        let vc = s * vmax;
        let t1 = ((vc - v0) * s / a).max(0.0);
        let t3 = ((vc - v1) * s / a).max(0.0);
        let d1 = (vc * vc - v0 * v0) / (2.0 * s * a);
        let d3 = (vc * vc - v1 * v1) / (2.0 * s * a);
        let tc = ((dx - d1 - d3) / vc).max(0.0);
        pieces.push((t1, s * a));
        pieces.push((tc, 0.0));
        pieces.push((t3, -s * a));
    }
    pieces.retain(|p| p.0 > 0.0);
    AxisProfile { x0, v0, pieces }
}

/// One steered edge: synchronized per-axis profiles and a linear yaw ramp.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub axes: [AxisProfile; 3],
    pub duration: f64,
    pub yaw0: f64,
    pub yaw_rate: f64,
}

impl Segment {
    pub fn state_at(&self, t: f64) -> RootState {
        let t = t.clamp(0.0, self.duration);
        let mut p = Vec3::zeros();
        let mut v = Vec3::zeros();
        for k in 0..3 {
            let (x, vx, _) = self.axes[k].eval(t);
            p[k] = x;
            v[k] = vx;
        }
        RootState::new(p, wrap_angle(self.yaw0 + self.yaw_rate * t), v)
    }

    pub fn accel_at(&self, t: f64) -> Vec3 {
        let t = t.clamp(0.0, self.duration);
        Vec3::new(self.axes[0].eval(t).2, self.axes[1].eval(t).2, self.axes[2].eval(t).2)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Concatenation of steered segments starting from `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootTrajectory {
    pub start: RootState,
    pub segments: Vec<Segment>,
}

impl RootTrajectory {
    pub fn stationary(start: RootState) -> Self {
        RootTrajectory { start, segments: Vec::new() }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn locate(&self, t: f64) -> Option<(&Segment, f64)> {
        let mut left = t.max(0.0);
        let last = self.segments.len().checked_sub(1)?;
        for (i, s) in self.segments.iter().enumerate() {
            if left <= s.duration || i == last {
                return Some((s, left));
            }
            left -= s.duration;
        }
        None
    }

    pub fn state_at(&self, t: f64) -> RootState {
        match self.locate(t) {
            Some((s, local)) => s.state_at(local),
            None => self.start,
        }
    }

    pub fn accel_at(&self, t: f64) -> Vec3 {
        match self.locate(t) {
            Some((s, local)) => s.accel_at(local),
            None => Vec3::zeros(),
        }
    }

    pub fn end(&self) -> RootState {
        self.state_at(self.duration())
    }

    /// The prefix up to time `t`.
    pub fn truncated(&self, t: f64) -> RootTrajectory {
        let mut out = RootTrajectory::stationary(self.start);
        let mut left = t.max(0.0);
        for s in &self.segments {
            if left <= 0.0 {
                break;
            }
            let mut s = s.clone();
            s.duration = s.duration.min(left);
            left -= s.duration;
            out.segments.push(s);
        }
        out
    }

    pub fn append(&mut self, other: RootTrajectory) {
        self.segments.extend(other.segments);
    }

    /// Validation sample times: every [`SAMPLE_DT`] plus the final instant.
    pub fn sample_times(&self) -> Vec<f64> {
        let total = self.duration();
        let n = (total / SAMPLE_DT).floor() as usize;
        let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 * SAMPLE_DT).collect();
        if total - ts[n] > 1e-12 {
            ts.push(total);
        }
        ts
    }
}

/// Double-integrator minimum-time steering between two root states. Faster
/// axes are slowed down to the slowest axis' duration by lowering their
/// acceleration bound.
pub fn dimt_steer(
    s0: &RootState,
    s1: &RootState,
    vmax: &[f64; 3],
    amax: &[f64; 3],
) -> Result<RootTrajectory, GuideError> {
    let profile = |k: usize, a: f64| {
        min_time_profile(s0.position[k], s0.velocity[k], s1.position[k], s1.velocity[k], a, vmax[k])
    };
    let fastest: Vec<AxisProfile> = (0..3).map(|k| profile(k, amax[k])).collect();
    let target = fastest.iter().map(|p| p.duration()).fold(0.0, f64::max);
    if target == 0.0 {
        return Ok(RootTrajectory::stationary(*s0));
    }
    let mut axes = Vec::with_capacity(3);
    for (k, p) in fastest.into_iter().enumerate() {
        let d = p.duration();
        if d == target || p.pieces.is_empty() && s0.velocity[k] == 0.0 {
            axes.push(p);
            continue;
        }
        // duration is non-increasing in the acceleration bound
        let (mut lo, mut hi) = (amax[k] * 1e-12, amax[k]);
        if profile(k, lo).duration() < target {
            return Err(GuideError::Infeasible { axis: k });
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if profile(k, mid).duration() > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        let p = profile(k, hi);
        if (p.duration() - target).abs() > 1e-9 {
            return Err(GuideError::Infeasible { axis: k });
        }
        axes.push(p);
    }
    let dyaw = wrap_angle(s1.yaw - s0.yaw);
    let axes: [AxisProfile; 3] = axes.try_into().expect("three axes");
    Ok(RootTrajectory {
        start: *s0,
        segments: vec![Segment {
            axes,
            duration: target,
            yaw0: s0.yaw,
            yaw_rate: dyaw / target,
        }],
    })
}

/// Whether a single sampled state satisfies reachability and the dynamic bounds.
pub fn state_valid(state: &RootState, accel: &Vec3, scene: &Scene, model: &RobotModel) -> bool {
    let tol = 1e-9;
    for k in 0..3 {
        if state.velocity[k].abs() > model.com_vel_max[k] + tol || accel[k].abs() > model.com_acc_max[k] + tol {
            return false;
        }
    }
    if accel.x.hypot(accel.y) > scene.friction() * GRAVITY * (1.0 + 1e-12) {
        return false;
    }
    let pose = state.pose();
    (0..model.n_feet).all(|k| has_candidate(&pose, k, scene, model))
}

/// Longest sampled-valid prefix of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedPrefix {
    pub trajectory: RootTrajectory,
    /// Every sample of the input validated.
    pub complete: bool,
    /// The first sample (the start state) validated.
    pub start_valid: bool,
}

pub fn validate_trajectory(traj: &RootTrajectory, scene: &Scene, model: &RobotModel) -> ValidatedPrefix {
    let times = traj.sample_times();
    let mut last_ok: Option<f64> = None;
    for &t in &times {
        if !state_valid(&traj.state_at(t), &traj.accel_at(t), scene, model) {
            return ValidatedPrefix {
                trajectory: traj.truncated(last_ok.unwrap_or(0.0)),
                complete: false,
                start_valid: last_ok.is_some(),
            };
        }
        last_ok = Some(t);
    }
    ValidatedPrefix {
        trajectory: traj.clone(),
        complete: true,
        start_valid: true,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RrtConfig {
    pub seed: u64,
    pub max_iters: usize,
    pub goal_bias: f64,
    /// Maximum horizontal extension per iteration (m).
    pub extend: f64,
    pub position_tol: f64,
    pub yaw_tol: f64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        RrtConfig {
            seed: 42,
            max_iters: 2000,
            goal_bias: 0.1,
            extend: 1.0,
            position_tol: 0.05,
            yaw_tol: 0.1,
        }
    }
}

const YAW_WEIGHT: f64 = 0.5;

struct Node {
    state: RootState,
    parent: Option<usize>,
    edge: Option<RootTrajectory>,
}

fn close_to(a: &RootState, b: &RootState, cfg: &RrtConfig) -> bool {
    (a.position - b.position).norm() <= cfg.position_tol && wrap_angle(a.yaw - b.yaw).abs() <= cfg.yaw_tol
}

/// Kinodynamic RRT over (x, y, yaw) with DIMT steering; the root height
/// follows the terrain at the model's nominal height.
pub fn rrt_plan(
    start: &RootState,
    goal: &RootState,
    scene: &Scene,
    model: &RobotModel,
    cfg: &RrtConfig,
) -> Result<RootTrajectory, GuideError> {
    if !state_valid(start, &Vec3::zeros(), scene, model) {
        return Err(GuideError::InvalidStart("an effector has no reachable surface".into()));
    }
    if close_to(start, goal, cfg) && start.velocity.norm() == 0.0 {
        return Ok(RootTrajectory::stationary(*start));
    }
    let (vmax, amax) = (&model.com_vel_max, &model.com_acc_max);
    let connect = |from: &RootState| -> Option<RootTrajectory> {
        let edge = dimt_steer(from, goal, vmax, amax).ok()?;
        let v = validate_trajectory(&edge, scene, model);
        v.complete.then_some(edge)
    };
    let mut nodes = vec![Node {
        state: *start,
        parent: None,
        edge: None,
    }];
    let extract = |nodes: &Vec<Node>, mut i: usize, last: RootTrajectory| {
        let mut edges = vec![last];
        while let Some(p) = nodes[i].parent {
            edges.push(nodes[i].edge.clone().expect("non-root node has an edge"));
            i = p;
        }
        let mut traj = RootTrajectory::stationary(*start);
        for e in edges.into_iter().rev() {
            traj.append(e);
        }
        traj
    };
    if let Some(edge) = connect(start) {
        return Ok(extract(&nodes, 0, edge));
    }
    let (lo, hi) = scene.bounds();
    let (lo, hi) = (lo.xy().add_scalar(-0.5), hi.xy().add_scalar(0.5));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.max_iters {
        let to_goal = rng.gen::<f64>() < cfg.goal_bias;
        let target = if to_goal {
            goal.position.xy()
        } else {
            nalgebra::Vector2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y))
        };
        let dist = |n: &Node| {
            let d = target - n.state.position.xy();
            let heading = if to_goal { goal.yaw } else { d.y.atan2(d.x) };
            let dz = scene.height_under(target.x, target.y) + model.nominal_height - n.state.position.z;
            (d.norm_squared() + dz * dz + (YAW_WEIGHT * wrap_angle(heading - n.state.yaw)).powi(2)).sqrt()
        };
        let near = (0..nodes.len())
            .min_by(|&a, &b| dist(&nodes[a]).total_cmp(&dist(&nodes[b])))
            .expect("tree is never empty");
        let from = nodes[near].state;
        let mut d = target - from.position.xy();
        let len = d.norm();
        if len < 1e-9 {
            continue;
        }
        let reaches_target = len <= cfg.extend;
        if !reaches_target {
            d *= cfg.extend / len;
        }
        let xy = from.position.xy() + d;
        let yaw = if to_goal && reaches_target { goal.yaw } else { d.y.atan2(d.x) };
        let new = RootState::at_rest(&RootPose::new(xy.x, xy.y, yaw), scene, model);
        let Ok(edge) = dimt_steer(&from, &new, vmax, amax) else {
            continue;
        };
        let prefix = validate_trajectory(&edge, scene, model);
        if prefix.trajectory.duration() < 1e-6 {
            continue;
        }
        let state = prefix.trajectory.end();
        nodes.push(Node {
            state,
            parent: Some(near),
            edge: Some(prefix.trajectory),
        });
        let idx = nodes.len() - 1;
        if prefix.complete && close_to(&state, goal, cfg) && state.velocity.norm() == 0.0 {
            let last = nodes.pop().expect("just pushed");
            return Ok(extract(&nodes, near, last.edge.expect("edge")));
        }
        if let Some(edge) = connect(&state) {
            return Ok(extract(&nodes, idx, edge));
        }
    }
    Err(GuideError::NotFound {
        iterations: cfg.max_iters,
    })
}

/// A foot of the initial stance, fixed on a known surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StanceFoot {
    pub position: Vec3,
    pub surface: usize,
}

/// Nominal foot placements under a root pose, projected onto the surfaces below.
pub fn nominal_stance(pose: &RootPose, scene: &Scene, model: &RobotModel) -> Result<Vec<StanceFoot>, GuideError> {
    let (s, c) = pose.yaw.sin_cos();
    model
        .feet
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let x = pose.x + c * f.stance[0] - s * f.stance[1];
            let y = pose.y + s * f.stance[0] + c * f.stance[1];
            let surface = scene
                .surface_under(x, y)
                .filter(|s| s.contains_xy(x, y, 1e-9))
                .ok_or_else(|| GuideError::InvalidStart(format!("foot {k} is not above any surface")))?;
            Ok(StanceFoot {
                position: Vec3::new(x, y, surface.height_at(x, y)),
                surface: surface.id,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledStep {
    pub time: f64,
    pub root: RootState,
    pub effector: usize,
    pub yaw: f64,
    pub candidates: Vec<usize>,
}

/// Steps to plan: one moving effector, heading and candidate set each.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule {
    pub dt: f64,
    pub steps: Vec<ScheduledStep>,
    pub initial: Vec<StanceFoot>,
    pub start: RootPose,
    pub goal: RootPose,
    /// Candidates and yaw come from the guide trajectory.
    pub guided: bool,
}

impl StepSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn mean_candidates(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.candidates.len()).sum::<usize>() as f64 / self.steps.len() as f64
    }

    /// Number of surface combinations.
    pub fn combinations(&self) -> f64 {
        self.steps.iter().map(|s| s.candidates.len() as f64).product()
    }
}

/// Gait order starting with the effector whose nominal placement is farthest
/// from the goal (ties keep gait order).
pub fn gait_from(start: &RootPose, goal: &RootPose, model: &RobotModel) -> Vec<usize> {
    let (s, c) = start.yaw.sin_cos();
    let dist = |k: usize| {
        let f = model.feet[k].stance;
        let x = start.x + c * f[0] - s * f[1];
        let y = start.y + s * f[0] + c * f[1];
        (x - goal.x).hypot(y - goal.y)
    };
    let mut first = 0;
    for g in 1..model.gait.len() {
        if dist(model.gait[g]) > dist(model.gait[first]) + 1e-9 {
            first = g;
        }
    }
    (0..model.gait.len()).map(|i| model.gait[(first + i) % model.gait.len()]).collect()
}

/// Number of steps for a duration: `ceil(T / dt)`.
pub fn step_count(duration: f64, dt: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        (duration / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Cuts a trajectory into one step every `dt` seconds.
pub fn discretize(traj: &RootTrajectory, dt: f64, scene: &Scene, model: &RobotModel) -> Result<StepSchedule, GuideError> {
    if !(dt > 0.0) {
        return Err(GuideError::InvalidArgument("dt must be positive".into()));
    }
    let total = traj.duration();
    let n = step_count(total, dt);
    let start = traj.start.root_pose();
    let goal = traj.end().root_pose();
    let gait = gait_from(&start, &goal, model);
    let initial = nominal_stance(&start, scene, model)?;
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let time = ((i + 1) as f64 * dt).min(total);
        let root = traj.state_at(time);
        let effector = gait[i % gait.len()];
        let candidates = candidate_surfaces(&root.pose(), effector, scene, model)
            .map_err(|ReachError::EmptyCandidates { effector }| GuideError::EmptyCandidates { step: i, effector })?;
        steps.push(ScheduledStep {
            time,
            root,
            effector,
            yaw: root.yaw,
            candidates,
        });
    }
    Ok(StepSchedule {
        dt,
        steps,
        initial,
        start,
        goal,
        guided: true,
    })
}

/// Trajectory samples as CSV (`t,x,y,z,yaw,cx,cy,cz,cvx,cvy,cvz`).
pub fn trajectory_csv(traj: &RootTrajectory) -> String {
    let mut out = String::from("t,x,y,z,yaw,cx,cy,cz,cvx,cvy,cvz\n");
    for t in traj.sample_times() {
        let s = traj.state_at(t);
        let c = s.com();
        let fields = [
            t,
            s.position.x,
            s.position.y,
            s.position.z,
            s.yaw,
            c.x,
            c.y,
            c.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
        ];
        let line: Vec<String> = fields.iter().map(|&v| format_number(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
