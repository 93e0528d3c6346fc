//! Assembly of the footstep problems: the Big-M mixed-integer program, its L1
//! relaxation, and the fixed-surface refinement QP.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format_number;
use crate::geometry::{Scene, Vec3};
use crate::guide::StepSchedule;
use crate::reachability::{phase_rows, Candidate, ConstraintRows, Contact, PhaseVars, PointRef, Relation, Row};
use crate::scenario::RobotModel;
use crate::solve::Problem;

pub const DEFAULT_BIG_M: f64 = 100.0;
/// Half-width of the xy goal box around the goal root position, applied to
/// the final COM waypoint (m).
pub const GOAL_HALF_WIDTH: f64 = 0.05;
/// Half-width of the xy goal box on each effector's last footstep (m).
pub const FOOT_GOAL_HALF_WIDTH: f64 = 0.1;
const OVERFLOW_LIMIT: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Binary selection, quadratic travel cost.
    MipOpt,
    /// Binary selection, no cost.
    MipFeas,
    /// Continuous non-negative slacks whose sum is minimized.
    Sl1m,
    /// One surface per step, quadratic travel cost.
    QpRefine,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormulationError {
    #[error("coefficient magnitude {0:e} exceeds the overflow guard")]
    OverflowGuard(f64),
    #[error("step {0} has no candidate surface")]
    EmptyCandidates(usize),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("selected surfaces admit no feasible footstep placement")]
    InfeasibleSelection,
    #[error("mode {0:?} is not built by this function")]
    WrongMode(Mode),
}

/// Columns owned by one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepColumns {
    pub foot: [usize; 3],
    pub com: [[usize; 3]; 2],
    /// Surface id, plane slack column and selection column per candidate.
    pub candidates: Vec<(usize, usize, usize)>,
}

impl StepColumns {
    pub fn selection_of(&self, surface: usize) -> Option<usize> {
        self.candidates.iter().find(|c| c.0 == surface).map(|c| c.2)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableLayout {
    pub steps: Vec<StepColumns>,
    pub n: usize,
}

impl VariableLayout {
    fn from_schedule(schedule: &StepSchedule) -> Self {
        let mut n = 0;
        let mut take = |k: usize| {
            let s = n;
            n += k;
            s
        };
        let steps = schedule
            .steps
            .iter()
            .map(|st| {
                let f = take(3);
                let c = take(6);
                let candidates = st
                    .candidates
                    .iter()
                    .map(|&j| {
                        let b = take(1);
                        let a = take(1);
                        (j, b, a)
                    })
                    .collect();
                StepColumns {
                    foot: [f, f + 1, f + 2],
                    com: [[c, c + 1, c + 2], [c + 3, c + 4, c + 5]],
                    candidates,
                }
            })
            .collect();
        VariableLayout { steps, n }
    }

    pub fn selection_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().flat_map(|s| s.candidates.iter().map(|c| c.2))
    }

    /// Human-readable column name used by the instance dump.
    pub fn name(&self, col: usize) -> String {
        const AX: [&str; 3] = ["x", "y", "z"];
        for (i, s) in self.steps.iter().enumerate() {
            if let Some(a) = s.foot.iter().position(|&c| c == col) {
                return format!("p{i}_{}", AX[a]);
            }
            for m in 0..2 {
                if let Some(a) = s.com[m].iter().position(|&c| c == col) {
                    return format!("c{i}_{m}_{}", AX[a]);
                }
            }
            for &(j, b, a) in &s.candidates {
                if b == col {
                    return format!("b{i}_{j}");
                }
                if a == col {
                    return format!("a{i}_{j}");
                }
            }
        }
        format!("x{col}")
    }

    pub fn foot(&self, x: &[f64], step: usize) -> Vec3 {
        let f = self.steps[step].foot;
        Vec3::new(x[f[0]], x[f[1]], x[f[2]])
    }

    pub fn com(&self, x: &[f64], step: usize, m: usize) -> Vec3 {
        let c = self.steps[step].com[m];
        Vec3::new(x[c[0]], x[c[1]], x[c[2]])
    }
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub mode: Mode,
    pub layout: VariableLayout,
    pub problem: Problem,
    /// Linear rows (also present in `problem`) with their selection slacks.
    pub rows: ConstraintRows,
    pub schedule: StepSchedule,
    pub big_m: f64,
    pub scene_name: String,
    /// Per step, the rank of each candidate by its distance to the nominal
    /// foot placement under the guide root (0 = closest). All zero for
    /// schedules without a guide.
    pub candidate_rank: Vec<Vec<usize>>,
}

impl ProblemInstance {
    /// `(selection column, score)` with score `|S_i| - 1 - rank`: larger for
    /// candidates closer to the guide.
    pub fn preference(&self) -> Vec<(usize, f64)> {
        self.layout
            .steps
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                let last = s.candidates.len() - 1;
                s.candidates.iter().enumerate().map(move |(k, c)| {
                    let rank = self.candidate_rank.get(i).and_then(|r| r.get(k)).copied().unwrap_or(0);
                    let score = if self.schedule.guided { (last - rank) as f64 } else { 0.0 };
                    (c.2, score)
                })
            })
            .collect()
    }

    /// Selected surface per step when every step has one selection at 0.
    pub fn selection_from(&self, x: &[f64], tol: f64) -> Option<Vec<usize>> {
        self.layout
            .steps
            .iter()
            .map(|s| {
                let active: Vec<usize> = s.candidates.iter().filter(|c| x[c.2] <= tol).map(|c| c.0).collect();
                (active.len() == 1).then(|| active[0])
            })
            .collect()
    }

    /// Rows with an active selection slack that sit within `1e-3` of the
    /// Big-M bound, i.e. where `M` may be too small.
    pub fn big_m_diagnostic(&self, x: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        for (r, row) in self.rows.rows.iter().enumerate() {
            let Some((s, m)) = row.slack else { continue };
            if x[s] < 0.5 || row.relation != Relation::Le {
                continue;
            }
            let lhs: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
            if lhs - row.rhs >= m * x[s] - 1e-3 {
                out.push(format!(
                    "row {r} ({}) binds at the Big-M bound",
                    self.layout.name(s)
                ));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub big_m: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { big_m: DEFAULT_BIG_M }
    }
}

/// Builds a MIP, feasibility MIP or L1-relaxation instance from a schedule.
pub fn build_instance(
    schedule: &StepSchedule,
    scene: &Scene,
    model: &RobotModel,
    mode: Mode,
    opts: &BuildOptions,
) -> Result<ProblemInstance, FormulationError> {
    if mode == Mode::QpRefine {
        return Err(FormulationError::WrongMode(mode));
    }
    assemble(schedule, scene, model, mode, opts.big_m, true)
}

/// Fixed-surface problem for a selection (surface id per step). With
/// `quadratic = false` the travel cost is omitted (pure feasibility).
pub fn build_refinement(
    instance: &ProblemInstance,
    selection: &[usize],
    scene: &Scene,
    model: &RobotModel,
    quadratic: bool,
) -> Result<ProblemInstance, FormulationError> {
    build_fixed(&instance.schedule, selection, scene, model, instance.big_m, quadratic)
}

/// [`build_refinement`] starting from a schedule instead of an instance.
pub fn build_fixed(
    schedule: &StepSchedule,
    selection: &[usize],
    scene: &Scene,
    model: &RobotModel,
    big_m: f64,
    quadratic: bool,
) -> Result<ProblemInstance, FormulationError> {
    if selection.len() != schedule.len() {
        return Err(FormulationError::InvalidSelection(format!(
            "{} surfaces given for {} steps",
            selection.len(),
            schedule.len()
        )));
    }
    let mut fixed = schedule.clone();
    for (i, (step, &j)) in fixed.steps.iter_mut().zip(selection).enumerate() {
        if !step.candidates.contains(&j) {
            return Err(FormulationError::InvalidSelection(format!(
                "surface {j} is not a candidate of step {i}"
            )));
        }
        step.candidates = vec![j];
    }
    assemble(&fixed, scene, model, Mode::QpRefine, big_m, quadratic)
}

fn assemble(
    schedule: &StepSchedule,
    scene: &Scene,
    model: &RobotModel,
    mode: Mode,
    big_m: f64,
    quadratic: bool,
) -> Result<ProblemInstance, FormulationError> {
    for (i, s) in schedule.steps.iter().enumerate() {
        if s.candidates.is_empty() {
            return Err(FormulationError::EmptyCandidates(i));
        }
    }
    let layout = VariableLayout::from_schedule(schedule);
    let mut p = Problem::new(layout.n);
    let mut rows = ConstraintRows::default();

    let phases = phases(schedule, &layout, model);
    for (cols, phase) in layout.steps.iter().zip(&phases) {
        // footstep on the selected surface
        for &(j, b, a) in &cols.candidates {
            let surface = scene.surface(j);
            for h in surface.halfspaces() {
                let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
                rows.rows.push(Row {
                    terms: (0..3).map(|ax| (cols.foot[ax], h[ax] / norm)).collect(),
                    relation: Relation::Le,
                    rhs: h[3] / norm,
                    slack: Some((a, big_m)),
                });
            }
            let n = surface.normal();
            let mut terms: Vec<(usize, f64)> = (0..3).map(|ax| (cols.foot[ax], n[ax])).collect();
            terms.push((b, -1.0));
            rows.rows.push(Row {
                terms,
                relation: Relation::Eq,
                rhs: surface.offset(),
                slack: None,
            });
            for sign in [1.0, -1.0] {
                rows.rows.push(Row {
                    terms: vec![(b, sign)],
                    relation: Relation::Le,
                    rhs: 0.0,
                    slack: Some((a, big_m)),
                });
            }
        }
        rows.extend(phase_rows(phase, model, scene, big_m));
        if matches!(mode, Mode::MipOpt | Mode::MipFeas) {
            rows.rows.push(Row {
                terms: cols.candidates.iter().map(|c| (c.2, 1.0)).collect(),
                relation: Relation::Eq,
                rhs: cols.candidates.len() as f64 - 1.0,
                slack: None,
            });
        }
    }

    for row in &rows.rows {
        let m = row.max_coefficient();
        if !m.is_finite() || m > OVERFLOW_LIMIT {
            return Err(FormulationError::OverflowGuard(m));
        }
        row.add_to(&mut p);
    }

    // selection bounds and integrality
    for col in layout.selection_columns() {
        match mode {
            Mode::MipOpt | Mode::MipFeas => {
                p.set_bounds(col, 0.0, 1.0);
                p.integer[col] = true;
            }
            Mode::Sl1m => {
                p.set_bounds(col, 0.0, f64::INFINITY);
                p.cost[col] = 1.0;
            }
            Mode::QpRefine => p.set_bounds(col, 0.0, 0.0),
        }
    }

    // a lone candidate is selected whatever the relaxation: its slack is zero
    if mode == Mode::Sl1m {
        for st in &layout.steps {
            if let [only] = st.candidates[..] {
                p.set_bounds(only.2, 0.0, 0.0);
            }
        }
    }

    // implied bounds: feet lie on some surface, COM within reach of a foot
    let (lo, hi) = scene.bounds();
    let reach = model
        .feet
        .iter()
        .flat_map(|f| f.com_kin.vertices())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    for cols in &layout.steps {
        for ax in 0..3 {
            p.set_bounds(cols.foot[ax], lo[ax], hi[ax]);
            for m in 0..2 {
                p.set_bounds(cols.com[m][ax], lo[ax] - reach, hi[ax] + reach);
            }
        }
    }

    // goal box on the final COM waypoint around the goal root position
    if let Some(last) = layout.steps.last() {
        let g = [schedule.goal.x, schedule.goal.y];
        for ax in 0..2 {
            let c = last.com[1][ax];
            let (l, h) = (p.lower[c], p.upper[c]);
            p.set_bounds(c, l.max(g[ax] - GOAL_HALF_WIDTH), h.min(g[ax] + GOAL_HALF_WIDTH));
        }
    }

    // goal box on the last footstep of each effector around its nominal stance
    for (e, g) in goal_stance(schedule, model).into_iter().enumerate() {
        if let Some(i) = (0..schedule.steps.len()).rev().find(|&i| schedule.steps[i].effector == e) {
            for ax in 0..2 {
                let c = layout.steps[i].foot[ax];
                let (l, h) = (p.lower[c], p.upper[c]);
                p.set_bounds(c, l.max(g[ax] - FOOT_GOAL_HALF_WIDTH), h.min(g[ax] + FOOT_GOAL_HALF_WIDTH));
            }
        }
    }

    if matches!(mode, Mode::MipOpt) || (mode == Mode::QpRefine && quadratic) {
        install_travel_cost(&mut p, schedule, &layout);
    }

    Ok(ProblemInstance {
        mode,
        layout,
        problem: p,
        rows,
        schedule: schedule.clone(),
        big_m,
        scene_name: scene.name.clone(),
        candidate_rank: candidate_rank(schedule, scene, model),
    })
}

fn candidate_rank(schedule: &StepSchedule, scene: &Scene, model: &RobotModel) -> Vec<Vec<usize>> {
    let anchors = even_progress(schedule);
    schedule
        .steps
        .iter()
        .zip(&anchors)
        .map(|(st, root)| {
            if !schedule.guided {
                return vec![0; st.candidates.len()];
            }
            let (s, c) = st.root.yaw.sin_cos();
            let f = model.feet[st.effector].stance;
            let x = root.x + c * f[0] - s * f[1];
            let y = root.y + s * f[0] + c * f[1];
            let z = root.z - model.nominal_height;
            let key = |j: usize| {
                let surf = scene.surface(j);
                (surf.distance_xy(x, y), (surf.height_at(x, y) - z).abs())
            };
            let mut order: Vec<usize> = (0..st.candidates.len()).collect();
            order.sort_by(|&a, &b| {
                let (ka, kb) = (key(st.candidates[a]), key(st.candidates[b]));
                ka.0.total_cmp(&kb.0)
                    .then(ka.1.total_cmp(&kb.1))
                    .then(st.candidates[a].cmp(&st.candidates[b]))
            });
            let mut rank = vec![0; order.len()];
            for (r, &k) in order.iter().enumerate() {
                rank[k] = r;
            }
            rank
        })
        .collect()
}

/// Nominal xy of each foot under the goal root pose.
pub fn goal_stance(schedule: &StepSchedule, model: &RobotModel) -> Vec<[f64; 2]> {
    let (s, c) = schedule.goal.yaw.sin_cos();
    model
        .feet
        .iter()
        .map(|f| {
            let [x, y] = f.stance;
            [schedule.goal.x + c * x - s * y, schedule.goal.y + s * x + c * y]
        })
        .collect()
}

/// Root positions at equal xy arc-length spacing along the polyline through
/// the start and the scheduled roots: the k-th of K steps of an effector sits
/// at fraction k/K, so every effector ends at the final root.
fn even_progress(schedule: &StepSchedule) -> Vec<Vec3> {
    let Some(first) = schedule.steps.first() else {
        return Vec::new();
    };
    let mut pts = vec![Vec3::new(schedule.start.x, schedule.start.y, first.root.position.z)];
    pts.extend(schedule.steps.iter().map(|s| s.root.position));
    let mut acc = vec![0.0];
    for w in pts.windows(2) {
        let d = (w[1] - w[0]).xy().norm();
        acc.push(acc.last().copied().unwrap_or(0.0) + d);
    }
    let total = *acc.last().unwrap_or(&0.0);
    let count = |e: usize| schedule.steps.iter().filter(|s| s.effector == e).count();
    let mut seen = vec![0usize; schedule.steps.iter().map(|s| s.effector + 1).max().unwrap_or(0)];
    schedule
        .steps
        .iter()
        .enumerate()
        .map(|(i, st)| {
            seen[st.effector] += 1;
            if total <= 0.0 {
                return pts[i + 1];
            }
            let target = total * seen[st.effector] as f64 / count(st.effector) as f64;
            let k = acc.partition_point(|&a| a < target).clamp(1, pts.len() - 1);
            let span = acc[k] - acc[k - 1];
            let t = if span > 0.0 { (target - acc[k - 1]) / span } else { 1.0 };
            pts[k - 1] + (pts[k] - pts[k - 1]) * t
        })
        .collect()
}

/// Per-step contact bookkeeping shared by the builders and plan verification.
pub fn phases(schedule: &StepSchedule, layout: &VariableLayout, model: &RobotModel) -> Vec<PhaseVars> {
    let mut latest: Vec<Contact> = schedule
        .initial
        .iter()
        .enumerate()
        .map(|(e, f)| Contact {
            effector: e,
            position: PointRef::Fixed(f.position),
            yaw: schedule.start.yaw,
            candidates: vec![Candidate {
                surface: f.surface,
                selection: None,
            }],
        })
        .collect();
    let mut out = Vec::with_capacity(schedule.len());
    for (i, (step, cols)) in schedule.steps.iter().zip(&layout.steps).enumerate() {
        let k = step.effector;
        let moving = Contact {
            effector: k,
            position: PointRef::Cols(cols.foot),
            yaw: step.yaw,
            candidates: cols
                .candidates
                .iter()
                .map(|&(j, _, a)| Candidate {
                    surface: j,
                    selection: Some(a),
                })
                .collect(),
        };
        let support = latest[model.gait_predecessor(k)].clone();
        latest[k] = moving.clone();
        out.push(PhaseVars {
            step: i,
            effector: k,
            com: cols.com,
            moving,
            support,
            stance: latest.clone(),
        });
    }
    out
}

/// Adds `sum_i |p_i - previous placement of the same effector|^2`.
fn install_travel_cost(p: &mut Problem, schedule: &StepSchedule, layout: &VariableLayout) {
    let mut prev: Vec<PointRef> = schedule.initial.iter().map(|f| PointRef::Fixed(f.position)).collect();
    for (step, cols) in schedule.steps.iter().zip(&layout.steps) {
        let e = step.effector;
        for ax in 0..3 {
            let c = cols.foot[ax];
            p.add_hessian(c, c, 2.0);
            match prev[e] {
                PointRef::Fixed(q) => {
                    p.cost[c] -= 2.0 * q[ax];
                    p.cost_constant += q[ax] * q[ax];
                }
                PointRef::Cols(d) => {
                    let d = d[ax];
                    p.add_hessian(d, d, 2.0);
                    p.add_hessian(c, d, -2.0);
                    p.add_hessian(d, c, -2.0);
                }
            }
        }
        prev[e] = PointRef::Cols(cols.foot);
    }
}

/// Travel cost of explicit placements: `sum |p_i - previous p of the same effector|^2`.
pub fn travel_cost(initial: &[Vec3], steps: &[(usize, Vec3)]) -> f64 {
    let mut prev = initial.to_vec();
    let mut total = 0.0;
    for &(e, p) in steps {
        total += (p - prev[e]).norm_squared();
        prev[e] = p;
    }
    total
}

/// Line-oriented LP-style listing of an instance, in column and row order.
pub fn dump_instance(inst: &ProblemInstance) -> String {
    let p = &inst.problem;
    let name = |c: usize| inst.layout.name(c);
    let term = |a: f64, c: usize| {
        format!("{} {} {}", if a < 0.0 { "-" } else { "+" }, format_number(a.abs()), name(c))
    };
    let mut out = String::new();
    let _ = writeln!(out, "\\ footstep instance: scene {} mode {:?} big_m {}", inst.scene_name, inst.mode, format_number(inst.big_m));
    let _ = writeln!(out, "minimize");
    let mut obj: Vec<String> = (0..p.n).filter(|&j| p.cost[j] != 0.0).map(|j| term(p.cost[j], j)).collect();
    if let Some(h) = &p.quadratic {
        let mut q = Vec::new();
        for i in 0..p.n {
            for j in i..p.n {
                let v = if i == j { h[i * p.n + i] } else { h[i * p.n + j] + h[j * p.n + i] };
                if v != 0.0 {
                    let sign = if v < 0.0 { "-" } else { "+" };
                    if i == j {
                        q.push(format!("{sign} {} {} ^ 2", format_number(v.abs()), name(i)));
                    } else {
                        q.push(format!("{sign} {} {} * {}", format_number(v.abs()), name(i), name(j)));
                    }
                }
            }
        }
        if !q.is_empty() {
            obj.push(format!("+ [ {} ] / 2", q.join(" ")));
        }
    }
    if p.cost_constant != 0.0 {
        obj.push(format!("+ {}", format_number(p.cost_constant)));
    }
    let _ = writeln!(out, " obj: {}", if obj.is_empty() { "0".into() } else { obj.join(" ") });
    let _ = writeln!(out, "subject to");
    for (kind, rows, rel) in [("l", &p.ineq, "<="), ("e", &p.eq, "=")] {
        for r in 0..rows.len() {
            let (cols, vals) = rows.row(r);
            let body: Vec<String> = cols.iter().zip(vals).map(|(&c, &a)| term(a, c)).collect();
            let _ = writeln!(out, " {kind}{r}: {} {rel} {}", body.join(" "), format_number(rows.rhs(r)));
        }
    }
    let _ = writeln!(out, "bounds");
    for j in 0..p.n {
        let (l, u) = (p.lower[j], p.upper[j]);
        let fmt = |v: f64| {
            if v.is_infinite() {
                if v > 0.0 { "+inf".to_string() } else { "-inf".to_string() }
            } else {
                format_number(v)
            }
        };
        let _ = writeln!(out, " {} <= {} <= {}", fmt(l), name(j), fmt(u));
    }
    let binaries: Vec<String> = (0..p.n).filter(|&j| p.integer[j]).map(name).collect();
    if !binaries.is_empty() {
        let _ = writeln!(out, "binary");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    let _ = writeln!(out, "end");
    out
}
