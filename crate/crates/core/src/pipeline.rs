//! End-to-end footstep planning: guide trajectory, step schedule, surface
//! selection, fixed-surface refinement and plan verification.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_fixed, build_instance, phases, travel_cost, BuildOptions, FormulationError, Mode, ProblemInstance,
    DEFAULT_BIG_M,
};
use crate::geometry::{Scene, Vec3};
use crate::guide::{
    discretize, gait_from, rrt_plan, AxisProfile, GuideError, RootState, RootTrajectory, RrtConfig, ScheduledStep,
    Segment, StanceFoot, StepSchedule,
};
use crate::reachability::{com_kinematic_rows, equilibrium_rows, quadruped_com_substitution, relative_foot_rows};
use crate::scenario::{RobotModel, RootPose, ScenarioError};
use crate::solve::{
    branch_and_bound, reweighted_l1, sl1m_solve, solve_lp, solve_qp, BnbOptions, SolveError, Sl1mOptions,
    Sl1mStatus, Status,
};

/// Verification tolerance for every plan check.
pub const VERIFY_TOL: f64 = 1e-6;
/// Largest number of selections [`brute_force_oracle`] will enumerate.
pub const ORACLE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MipOpt,
    MipFeas,
    Sl1m,
    #[serde(rename = "sl1m-rw")]
    Sl1mReweighted,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MipOpt, Method::MipFeas, Method::Sl1m, Method::Sl1mReweighted];

    pub fn name(self) -> &'static str {
        match self {
            Method::MipOpt => "mip-opt",
            Method::MipFeas => "mip-feas",
            Method::Sl1m => "sl1m",
            Method::Sl1mReweighted => "sl1m-rw",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_mip(self) -> bool {
        matches!(self, Method::MipOpt | Method::MipFeas)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pruning {
    Trajectory,
    None,
}

impl Pruning {
    pub fn name(self) -> &'static str {
        match self {
            Pruning::Trajectory => "trajectory",
            Pruning::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Pruning> {
        [Pruning::Trajectory, Pruning::None].into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Pruning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOptions {
    pub presolve: bool,
    pub max_trials: usize,
    pub big_m: f64,
    pub node_limit: usize,
    pub rrt_max_iters: usize,
    pub reweight_iters: usize,
    pub reweight_eps: f64,
    pub tie_break: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            presolve: true,
            max_trials: Sl1mOptions::default().max_trials,
            big_m: DEFAULT_BIG_M,
            node_limit: BnbOptions::default().node_limit,
            rrt_max_iters: RrtConfig::default().max_iters,
            reweight_iters: 5,
            reweight_eps: 1e-3,
            tie_break: Sl1mOptions::default().tie_break,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlanQuery {
    pub scene: Scene,
    pub model: RobotModel,
    pub start: RootPose,
    pub goal: RootPose,
    pub method: Method,
    pub pruning: Pruning,
    pub dt: f64,
    pub seed: u64,
    pub options: PlanOptions,
}

impl PlanQuery {
    pub fn new(scene: Scene, model: RobotModel, start: RootPose, goal: RootPose) -> Self {
        PlanQuery {
            scene,
            model,
            start,
            goal,
            method: Method::Sl1m,
            pruning: Pruning::Trajectory,
            dt: 1.0,
            seed: 42,
            options: PlanOptions::default(),
        }
    }

    pub fn from_scenario(sc: &crate::scenario::Scenario, model: RobotModel) -> Self {
        PlanQuery::new(sc.scene.clone(), model, sc.start, sc.goal)
    }

    /// Errors for invalid queries; otherwise warnings (possibly empty).
    pub fn validate(&self) -> Result<Vec<String>, ScenarioError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ScenarioError::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.options.big_m > 0.0) {
            return Err(ScenarioError::InvalidParams("big-M must be positive".into()));
        }
        self.model.validate()?;
        let mut warnings = Vec::new();
        if !self.method.is_mip() && self.pruning == Pruning::None {
            warnings.push("the L1 relaxation without pruning often leaves steps undecided".to_string());
        }
        Ok(warnings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Query,
    Guide,
    Schedule,
    Formulation,
    Selection,
    Refinement,
    Verification,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Query => "query",
            Stage::Guide => "guide",
            Stage::Schedule => "schedule",
            Stage::Formulation => "formulation",
            Stage::Selection => "selection",
            Stage::Refinement => "refinement",
            Stage::Verification => "verification",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FailureCause {
    #[error(transparent)]
    Query(#[from] ScenarioError),
    #[error(transparent)]
    Guide(#[from] GuideError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("fallback exhausted after {trials} trials")]
    FallbackExhausted { trials: usize },
    #[error("node limit reached after {nodes} nodes")]
    NodeLimit { nodes: usize },
    #[error("failed checks: {}", .0.join(", "))]
    Verification(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("planning failed at stage={stage}: {cause}")]
pub struct PlanningFailed {
    pub stage: Stage,
    pub cause: FailureCause,
}

impl PlanningFailed {
    fn new(stage: Stage, cause: impl Into<FailureCause>) -> Self {
        PlanningFailed {
            stage,
            cause: cause.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Guide planning and discretization (ms).
    pub trajectory_ms: f64,
    /// Surface-selection problem build and solve (ms).
    pub footstep_ms: f64,
    /// Fixed-surface refinement (ms).
    pub optimisation_ms: f64,
    pub n_steps: usize,
    pub mean_candidates: f64,
    pub node_count: Option<usize>,
    pub root_integral: Option<bool>,
    pub trials_used: Option<usize>,
    pub undecided: Option<usize>,
    pub sl1m_status: Option<Sl1mStatus>,
    pub warnings: Vec<String>,
}

impl PlanStats {
    pub fn total_ms(&self) -> f64 {
        self.trajectory_ms + self.footstep_ms + self.optimisation_ms
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannedStep {
    pub effector: usize,
    pub surface: usize,
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FootstepPlan {
    pub scene_name: String,
    pub method: Method,
    pub pruning: Pruning,
    pub seed: u64,
    pub steps: Vec<PlannedStep>,
    /// `(c_{i,0}, c_{i,1})` per step.
    pub com: Vec<[Vec3; 2]>,
    pub cost: f64,
    /// The schedule the plan was solved on.
    pub schedule: StepSchedule,
    pub trajectory: RootTrajectory,
    pub big_m: f64,
    pub stats: PlanStats,
}

impl FootstepPlan {
    pub fn selection(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.surface).collect()
    }

    /// Full column vector of the fixed-surface problem for this plan.
    fn columns(&self, inst: &ProblemInstance, scene: &Scene) -> Vec<f64> {
        let mut x = vec![0.0; inst.layout.n];
        for (i, (cols, st)) in inst.layout.steps.iter().zip(&self.steps).enumerate() {
            for ax in 0..3 {
                x[cols.foot[ax]] = st.position[ax];
                for m in 0..2 {
                    x[cols.com[m][ax]] = self.com[i][m][ax];
                }
            }
            for &(j, b, _) in &cols.candidates {
                let s = scene.surface(j);
                x[b] = s.normal().dot(&st.position) - s.offset();
            }
        }
        x
    }
}

/// Travel cost of a plan recomputed from its placements.
pub fn objective_cost(plan: &FootstepPlan) -> f64 {
    let initial: Vec<Vec3> = plan.schedule.initial.iter().map(|f| f.position).collect();
    let steps: Vec<(usize, Vec3)> = plan.steps.iter().map(|s| (s.effector, s.position)).collect();
    travel_cost(&initial, &steps)
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Schedule with every surface as a candidate and the yaw fixed to the
/// straight-line heading from start to goal.
pub fn unpruned_schedule(pruned: &StepSchedule, scene: &Scene) -> StepSchedule {
    let (s, g) = (&pruned.start, &pruned.goal);
    let yaw = if (g.x - s.x).hypot(g.y - s.y) > 1e-9 {
        (g.y - s.y).atan2(g.x - s.x)
    } else {
        s.yaw
    };
    let mut out = pruned.clone();
    out.guided = false;
    for st in &mut out.steps {
        st.candidates = (0..scene.len()).collect();
        st.yaw = yaw;
    }
    out
}

/// Builds the step schedule of a query (guide trajectory included).
pub fn plan_schedule(query: &PlanQuery) -> Result<(StepSchedule, RootTrajectory), PlanningFailed> {
    let start = RootState::at_rest(&query.start, &query.scene, &query.model);
    let goal = RootState::at_rest(&query.goal, &query.scene, &query.model);
    let cfg = RrtConfig {
        seed: query.seed,
        max_iters: query.options.rrt_max_iters,
        ..RrtConfig::default()
    };
    let traj = rrt_plan(&start, &goal, &query.scene, &query.model, &cfg).map_err(|e| PlanningFailed::new(Stage::Guide, e))?;
    let schedule =
        discretize(&traj, query.dt, &query.scene, &query.model).map_err(|e| PlanningFailed::new(Stage::Schedule, e))?;
    let schedule = match query.pruning {
        Pruning::Trajectory => schedule,
        Pruning::None => unpruned_schedule(&schedule, &query.scene),
    };
    Ok((schedule, traj))
}

/// Result of the surface-selection stage.
struct Selection {
    surfaces: Vec<usize>,
    node_count: Option<usize>,
    root_integral: Option<bool>,
    trials_used: Option<usize>,
    undecided: Option<usize>,
    sl1m_status: Option<Sl1mStatus>,
}

fn select_surfaces(query: &PlanQuery, inst: &ProblemInstance) -> Result<Selection, PlanningFailed> {
    let fail = |c: FailureCause| PlanningFailed::new(Stage::Selection, c);
    match query.method {
        Method::MipOpt | Method::MipFeas => {
            let feasibility = query.method == Method::MipFeas;
            let opts = BnbOptions {
                presolve: query.options.presolve,
                node_limit: query.options.node_limit,
                first_incumbent: feasibility,
                ..BnbOptions::default()
            };
            let r = if feasibility {
                let mut p = inst.problem.clone();
                for (c, score) in inst.preference() {
                    p.cost[c] = score;
                }
                branch_and_bound(&p, &opts)
            } else {
                branch_and_bound(&inst.problem, &opts)
            };
            let (r, stats) = r.map_err(|e| fail(e.into()))?;
            match r.status {
                Status::Optimal => {}
                Status::NodeLimit => return Err(fail(FailureCause::NodeLimit { nodes: stats.node_count })),
                _ => return Err(fail(FailureCause::Infeasible)),
            }
            let surfaces = inst
                .layout
                .steps
                .iter()
                .map(|s| s.candidates.iter().min_by(|a, b| r.x[a.2].total_cmp(&r.x[b.2])).expect("candidate").0)
                .collect();
            Ok(Selection {
                surfaces,
                node_count: Some(stats.node_count),
                root_integral: Some(stats.root_integral),
                trials_used: None,
                undecided: None,
                sl1m_status: None,
            })
        }
        Method::Sl1m | Method::Sl1mReweighted => {
            let opts = Sl1mOptions {
                max_trials: query.options.max_trials,
                tie_break: query.options.tie_break,
                ..Sl1mOptions::default()
            };
            let out = if query.method == Method::Sl1m {
                sl1m_solve(inst, &opts)
            } else {
                reweighted_l1(inst, query.options.reweight_iters, query.options.reweight_eps, &opts)
            }
            .map_err(|e| fail(e.into()))?;
            match out.status {
                Sl1mStatus::Infeasible => return Err(fail(FailureCause::Infeasible)),
                Sl1mStatus::Exhausted | Sl1mStatus::TrialLimit => {
                    return Err(fail(FailureCause::FallbackExhausted {
                        trials: out.trials_used,
                    }))
                }
                Sl1mStatus::Decided | Sl1mStatus::Fallback => {}
            }
            Ok(Selection {
                surfaces: out.selection.clone().expect("selection on success"),
                node_count: None,
                root_integral: None,
                trials_used: Some(out.trials_used),
                undecided: Some(out.undecided.len()),
                sl1m_status: Some(out.status),
            })
        }
    }
}

/// Solves the fixed-surface travel-cost QP for a selection.
pub fn refine(
    schedule: &StepSchedule,
    selection: &[usize],
    scene: &Scene,
    model: &RobotModel,
    big_m: f64,
) -> Result<(Vec<PlannedStep>, Vec<[Vec3; 2]>, f64), PlanningFailed> {
    let fail = |c: FailureCause| PlanningFailed::new(Stage::Refinement, c);
    let inst = build_fixed(schedule, selection, scene, model, big_m, true).map_err(|e| fail(e.into()))?;
    let r = solve_qp(&inst.problem).map_err(|e| fail(e.into()))?;
    if !r.is_optimal() {
        return Err(fail(FailureCause::Infeasible));
    }
    let steps = schedule
        .steps
        .iter()
        .enumerate()
        .map(|(i, st)| PlannedStep {
            effector: st.effector,
            surface: selection[i],
            position: inst.layout.foot(&r.x, i),
            yaw: st.yaw,
        })
        .collect();
    let com = (0..schedule.len())
        .map(|i| [inst.layout.com(&r.x, i, 0), inst.layout.com(&r.x, i, 1)])
        .collect();
    Ok((steps, com, r.objective))
}

/// Runs the complete pipeline for one query.
pub fn plan_footsteps(query: &PlanQuery) -> Result<FootstepPlan, PlanningFailed> {
    let warnings = query.validate().map_err(|e| PlanningFailed::new(Stage::Query, e))?;
    let t0 = Instant::now();
    let (schedule, trajectory) = plan_schedule(query)?;
    let trajectory_ms = ms(t0);
    plan_on_schedule(query, schedule, trajectory, trajectory_ms, warnings)
}

/// Selection and refinement on a prepared schedule.
pub fn plan_on_schedule(
    query: &PlanQuery,
    schedule: StepSchedule,
    trajectory: RootTrajectory,
    trajectory_ms: f64,
    warnings: Vec<String>,
) -> Result<FootstepPlan, PlanningFailed> {
    let (scene, model) = (&query.scene, &query.model);
    let t1 = Instant::now();
    let mode = match query.method {
        Method::MipOpt => Mode::MipOpt,
        Method::MipFeas => Mode::MipFeas,
        Method::Sl1m | Method::Sl1mReweighted => Mode::Sl1m,
    };
    let opts = BuildOptions {
        big_m: query.options.big_m,
    };
    let inst =
        build_instance(&schedule, scene, model, mode, &opts).map_err(|e| PlanningFailed::new(Stage::Formulation, e))?;
    let sel = select_surfaces(query, &inst)?;
    let footstep_ms = ms(t1);

    let t2 = Instant::now();
    let (steps, com, cost) = refine(&schedule, &sel.surfaces, scene, model, query.options.big_m)?;
    let optimisation_ms = ms(t2);

    let stats = PlanStats {
        trajectory_ms,
        footstep_ms,
        optimisation_ms,
        n_steps: schedule.len(),
        mean_candidates: schedule.mean_candidates(),
        node_count: sel.node_count,
        root_integral: sel.root_integral,
        trials_used: sel.trials_used,
        undecided: sel.undecided,
        sl1m_status: sel.sl1m_status,
        warnings,
    };
    let plan = FootstepPlan {
        scene_name: scene.name.clone(),
        method: query.method,
        pruning: query.pruning,
        seed: query.seed,
        steps,
        com,
        cost,
        schedule,
        trajectory,
        big_m: query.options.big_m,
        stats,
    };
    let report = verify_plan(&plan, scene, model);
    if !report.is_clean() {
        let failed = report.failures().map(|c| format!("{} ({:e})", c.name, c.residual)).collect();
        return Err(PlanningFailed::new(Stage::Verification, FailureCause::Verification(failed)));
    }
    Ok(plan)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleObjective {
    Feasibility,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("{0:e} selections exceed the enumeration guard")]
    TooLarge(f64),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolveError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Best selection, `None` when every selection is infeasible.
    pub selection: Option<Vec<usize>>,
    pub cost: f64,
    pub x: Vec<f64>,
    pub feasible_count: usize,
    pub evaluated: usize,
}

impl OracleResult {
    pub fn is_infeasible(&self) -> bool {
        self.selection.is_none()
    }
}

/// Exhaustive enumeration of surface selections, each solved as a fixed
/// LP (feasibility) or QP (travel cost).
pub fn brute_force_oracle(
    schedule: &StepSchedule,
    scene: &Scene,
    model: &RobotModel,
    objective: OracleObjective,
    big_m: f64,
) -> Result<OracleResult, OracleError> {
    let combos = schedule.combinations();
    if combos > ORACLE_LIMIT {
        return Err(OracleError::TooLarge(combos));
    }
    let quadratic = objective == OracleObjective::Quadratic;
    let mut best = OracleResult {
        selection: None,
        cost: f64::INFINITY,
        x: Vec::new(),
        feasible_count: 0,
        evaluated: 0,
    };
    let n = schedule.len();
    let mut digits = vec![0usize; n];
    loop {
        let selection: Vec<usize> = (0..n).map(|i| schedule.steps[i].candidates[digits[i]]).collect();
        let inst = build_fixed(schedule, &selection, scene, model, big_m, quadratic)?;
        let r = if quadratic {
            solve_qp(&inst.problem)?
        } else {
            solve_lp(&inst.problem)?
        };
        best.evaluated += 1;
        if r.is_optimal() {
            best.feasible_count += 1;
            let cost = if quadratic { r.objective } else { 0.0 };
            if cost < best.cost {
                best.cost = cost;
                best.selection = Some(selection);
                best.x = r.x;
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < schedule.steps[pos].candidates.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest violation found (0 when satisfied).
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn push(&mut self, name: &str, residual: f64) {
        let residual = residual.max(0.0);
        self.checks.push(Check {
            name: name.to_string(),
            passed: residual <= VERIFY_TOL,
            residual,
        });
    }

    pub fn is_clean(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            s.push_str(&format!("{:<16} {verdict} {:e}\n", c.name, c.residual));
        }
        s
    }
}

/// Number of interior samples on each COM segment.
const SEGMENT_SAMPLES: usize = 10;

/// Rechecks every plan invariant against the scene and model.
pub fn verify_plan(plan: &FootstepPlan, scene: &Scene, model: &RobotModel) -> VerifyReport {
    let mut report = VerifyReport::default();
    let n = plan.schedule.len();
    if plan.steps.len() != n || plan.com.len() != n {
        report.push("shape", 1.0);
        return report;
    }
    if plan.steps.iter().any(|s| s.surface >= scene.len()) {
        report.push("surface_ids", 1.0);
        return report;
    }

    // surfaces and candidate membership
    let mut on_surface: f64 = 0.0;
    let mut membership: f64 = 0.0;
    for (st, sch) in plan.steps.iter().zip(&plan.schedule.steps) {
        let s = scene.surface(st.surface);
        on_surface = on_surface.max((s.normal().dot(&st.position) - s.offset()).abs());
        for h in s.halfspaces() {
            let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
            on_surface = on_surface.max((h[0] * st.position.x + h[1] * st.position.y + h[2] * st.position.z - h[3]) / norm);
        }
        if !sch.candidates.contains(&st.surface) || st.effector != sch.effector {
            membership = 1.0;
        }
    }
    report.push("surface", on_surface);
    report.push("candidates", membership);

    let gait = gait_from(&plan.schedule.start, &plan.schedule.goal, model);
    let gait_ok = plan.steps.iter().enumerate().all(|(i, s)| s.effector == gait[i % gait.len()]);
    report.push("gait", if gait_ok { 0.0 } else { 1.0 });

    let selection = plan.selection();
    let Ok(inst) = build_fixed(&plan.schedule, &selection, scene, model, plan.big_m, true) else {
        report.push("formulation", 1.0);
        return report;
    };
    let x = plan.columns(&inst, scene);
    let phases = phases(&inst.schedule, &inst.layout, model);
    let (mut balance, mut com_kin, mut rel) = (0.0f64, 0.0f64, 0.0f64);
    let mut segment = 0.0f64;
    let quadruped = model.quad_weights.is_some();
    for (phase, cols) in phases.iter().zip(&inst.layout.steps) {
        let b = if quadruped {
            quadruped_com_substitution(phase, model)
        } else {
            equilibrium_rows(phase, model, scene, plan.big_m)
        };
        balance = balance.max(b.max_violation(&x));
        let kin = com_kinematic_rows(phase, model, scene, plan.big_m);
        com_kin = com_kin.max(kin.max_violation(&x));
        rel = rel.max(relative_foot_rows(phase, model, scene, plan.big_m).max_violation(&x));

        let mut xs = x.clone();
        for k in 1..SEGMENT_SAMPLES {
            let t = k as f64 / SEGMENT_SAMPLES as f64;
            for ax in 0..3 {
                let v = (1.0 - t) * x[cols.com[0][ax]] + t * x[cols.com[1][ax]];
                xs[cols.com[0][ax]] = v;
                xs[cols.com[1][ax]] = v;
            }
            segment = segment.max(kin.max_violation(&xs));
        }
    }
    report.push(if quadruped { "com_substitution" } else { "equilibrium" }, balance);
    report.push("com_kinematic", com_kin);
    report.push("relative_foot", rel);
    report.push("com_segment", segment);

    let p = &inst.problem;
    let bounds = (0..p.n)
        .map(|j| (p.lower[j] - x[j]).max(x[j] - p.upper[j]))
        .fold(0.0, f64::max);
    report.push("bounds", bounds);

    let cost = objective_cost(plan);
    report.push("cost", (cost - plan.cost).abs() / cost.abs().max(1.0));
    report
}

// ---------------------------------------------------------------------------
// plan files

#[derive(Serialize, Deserialize)]
struct StepRecord {
    index: usize,
    effector: usize,
    surface: usize,
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    time: f64,
    candidates: Vec<usize>,
    /// Root state at the step: `[x, y, z, yaw, vx, vy, vz]`.
    root: [f64; 7],
    com0: [f64; 3],
    com1: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct InitialRecord {
    surface: usize,
    position: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    duration: f64,
    yaw0: f64,
    yaw_rate: f64,
    /// Per axis: `[x0, v0]`.
    start: [[f64; 2]; 3],
    /// Per axis: `(duration, acceleration)` pieces.
    pieces: [Vec<[f64; 2]>; 3],
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRecord {
    start: [f64; 7],
    segments: Vec<SegmentRecord>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    scene: String,
    method: Method,
    pruning: Pruning,
    seed: u64,
    dt: f64,
    big_m: f64,
    cost: f64,
    start: RootPose,
    goal: RootPose,
    stats: PlanStats,
    initial: Vec<InitialRecord>,
    steps: Vec<StepRecord>,
    trajectory: TrajectoryRecord,
}

fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn state_record(s: &RootState) -> [f64; 7] {
    [
        s.position.x,
        s.position.y,
        s.position.z,
        s.yaw,
        s.velocity.x,
        s.velocity.y,
        s.velocity.z,
    ]
}

fn state_from(r: &[f64; 7]) -> RootState {
    RootState::new(Vec3::new(r[0], r[1], r[2]), r[3], Vec3::new(r[4], r[5], r[6]))
}

/// Plan export: per-step records, a stats block and the guide trajectory.
pub fn plan_to_toml(plan: &FootstepPlan) -> String {
    let steps = plan
        .steps
        .iter()
        .zip(&plan.schedule.steps)
        .zip(&plan.com)
        .enumerate()
        .map(|(index, ((st, sch), c))| StepRecord {
            index,
            effector: st.effector,
            surface: st.surface,
            x: st.position.x,
            y: st.position.y,
            z: st.position.z,
            yaw: st.yaw,
            time: sch.time,
            candidates: sch.candidates.clone(),
            root: state_record(&sch.root),
            com0: arr3(&c[0]),
            com1: arr3(&c[1]),
        })
        .collect();
    let trajectory = TrajectoryRecord {
        start: state_record(&plan.trajectory.start),
        segments: plan
            .trajectory
            .segments
            .iter()
            .map(|s| SegmentRecord {
                duration: s.duration,
                yaw0: s.yaw0,
                yaw_rate: s.yaw_rate,
                start: std::array::from_fn(|a| [s.axes[a].x0, s.axes[a].v0]),
                pieces: std::array::from_fn(|a| s.axes[a].pieces.iter().map(|&(d, acc)| [d, acc]).collect()),
            })
            .collect(),
    };
    let file = PlanFile {
        scene: plan.scene_name.clone(),
        method: plan.method,
        pruning: plan.pruning,
        seed: plan.seed,
        dt: plan.schedule.dt,
        big_m: plan.big_m,
        cost: plan.cost,
        start: plan.schedule.start,
        goal: plan.schedule.goal,
        stats: plan.stats.clone(),
        initial: plan
            .schedule
            .initial
            .iter()
            .map(|f| InitialRecord {
                surface: f.surface,
                position: arr3(&f.position),
            })
            .collect(),
        steps,
        trajectory,
    };
    toml::to_string(&file).expect("plan serializes")
}

/// Reads a plan written by [`plan_to_toml`].
pub fn plan_from_toml(text: &str) -> Result<FootstepPlan, ScenarioError> {
    let f: PlanFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| {
                let before = &text[..s.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                (line, column)
            })
            .unwrap_or((0, 0));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let v3 = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
    let schedule = StepSchedule {
        dt: f.dt,
        steps: f
            .steps
            .iter()
            .map(|s| ScheduledStep {
                time: s.time,
                root: state_from(&s.root),
                effector: s.effector,
                yaw: s.yaw,
                candidates: s.candidates.clone(),
            })
            .collect(),
        initial: f
            .initial
            .iter()
            .map(|i| StanceFoot {
                position: v3(i.position),
                surface: i.surface,
            })
            .collect(),
        start: f.start,
        goal: f.goal,
        guided: f.pruning == Pruning::Trajectory,
    };
    let trajectory = RootTrajectory {
        start: state_from(&f.trajectory.start),
        segments: f
            .trajectory
            .segments
            .iter()
            .map(|s| Segment {
                axes: std::array::from_fn(|a| AxisProfile {
                    x0: s.start[a][0],
                    v0: s.start[a][1],
                    pieces: s.pieces[a].iter().map(|p| (p[0], p[1])).collect(),
                }),
                duration: s.duration,
                yaw0: s.yaw0,
                yaw_rate: s.yaw_rate,
            })
            .collect(),
    };
    Ok(FootstepPlan {
        scene_name: f.scene,
        method: f.method,
        pruning: f.pruning,
        seed: f.seed,
        steps: f
            .steps
            .iter()
            .map(|s| PlannedStep {
                effector: s.effector,
                surface: s.surface,
                position: Vec3::new(s.x, s.y, s.z),
                yaw: s.yaw,
            })
            .collect(),
        com: f.steps.iter().map(|s| [v3(s.com0), v3(s.com1)]).collect(),
        cost: f.cost,
        schedule,
        trajectory,
        big_m: f.big_m,
        stats: f.stats,
    })
}
