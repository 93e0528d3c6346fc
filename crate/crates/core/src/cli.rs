//! Command-line front end: `plan`, `bench` and `export`.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when planning fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::format_number;
use crate::geometry::Scene;
use crate::guide::trajectory_csv;
use crate::pipeline::{
    plan_footsteps, plan_from_toml, plan_to_toml, verify_plan, FootstepPlan, Method, PlanQuery, PlanningFailed,
    Pruning, VerifyReport,
};
use crate::scenario::{generate_scene, load_robot, load_scenario, RobotModel, Scenario, SceneSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Planning(#[from] PlanningFailed),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Planning(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "footstep", version, about = "Contact-surface selection and footstep planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one query and write the plan file and its verification report.
    Plan(PlanArgs),
    /// Run a scenario x method x pruning matrix and write a CSV report.
    Bench(BenchArgs),
    /// Write CSV point data for plotting.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    MipOpt,
    MipFeas,
    Sl1m,
    #[value(name = "sl1m-rw")]
    Sl1mRw,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::MipOpt => Method::MipOpt,
            MethodArg::MipFeas => Method::MipFeas,
            MethodArg::Sl1m => Method::Sl1m,
            MethodArg::Sl1mRw => Method::Sl1mReweighted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PruneArg {
    Trajectory,
    None,
}

impl From<PruneArg> for Pruning {
    fn from(p: PruneArg) -> Pruning {
        match p {
            PruneArg::Trajectory => Pruning::Trajectory,
            PruneArg::None => Pruning::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Options shared by `plan` and `bench`.
#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    /// Robot: `biped`, `quadruped` or a robot file.
    #[arg(long)]
    pub robot: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub presolve: Switch,
    #[arg(long, default_value_t = 4000)]
    pub max_trials: usize,
    #[arg(long, default_value_t = crate::formulation::DEFAULT_BIG_M)]
    pub big_m: f64,
    /// Branch-and-bound node budget.
    #[arg(long, default_value_t = 20_000)]
    pub node_limit: usize,
}

#[derive(Clone, Debug, Args)]
pub struct PlanArgs {
    /// Generator name (`stairs7`, `rubbles18:3`, `bridge`, ...) or scene file.
    #[arg(long)]
    pub scene: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Sl1m)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = PruneArg::Trajectory)]
    pub prune: PruneArg,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Plan file; the report goes next to it with a `.verify.txt` suffix.
    /// Without it the plan is printed and the report goes to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    /// Scenes to run; repeat the flag. Defaults to the four generated kinds.
    #[arg(long = "scene")]
    pub scenes: Vec<String>,
    /// Methods to run; repeat the flag. Defaults to all.
    #[arg(long = "method", value_enum)]
    pub methods: Vec<MethodArg>,
    /// Pruning modes; repeat the flag. Defaults to both.
    #[arg(long = "prune", value_enum)]
    pub prunes: Vec<PruneArg>,
    /// Repetitions per cell; run r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// CSV file; printed when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Footsteps,
    Com,
    Trajectory,
    Surfaces,
}

#[derive(Clone, Debug, Args)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub kind: ExportKind,
    /// Plan file (footsteps, com, trajectory).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Scene name or file (surfaces).
    #[arg(long)]
    pub scene: Option<String>,
    /// CSV file; printed when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_BENCH_SCENES: [&str; 4] = ["bridge", "stairs7", "rubbles18", "rubbles_stairs"];

/// Resolves a generator name or a scene file.
pub fn resolve_scene(arg: &str) -> Result<Scenario, CliError> {
    if let Some(spec) = SceneSpec::from_name(arg) {
        return generate_scene(&spec).map_err(|e| CliError::Input(format!("{arg}: {e}")));
    }
    let text = std::fs::read_to_string(arg).map_err(|_| CliError::Input(format!("scene not found: {arg}")))?;
    load_scenario(&text).map_err(|e| CliError::Input(format!("{arg}: {e}")))
}

/// Resolves `biped`, `quadruped` or a robot file.
pub fn resolve_robot(arg: Option<&str>) -> Result<RobotModel, CliError> {
    match arg {
        None | Some("biped") => Ok(RobotModel::biped()),
        Some("quadruped") => Ok(RobotModel::quadruped()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|_| CliError::Input(format!("robot not found: {path}")))?;
            load_robot(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
        }
    }
}

fn query(sc: &Scenario, method: Method, pruning: Pruning, solve: &SolveArgs) -> Result<PlanQuery, CliError> {
    let model = resolve_robot(solve.robot.as_deref())?;
    let mut q = PlanQuery::from_scenario(sc, model);
    q.method = method;
    q.pruning = pruning;
    q.dt = solve.dt;
    q.seed = solve.seed;
    q.options.presolve = solve.presolve == Switch::On;
    q.options.max_trials = solve.max_trials;
    q.options.big_m = solve.big_m;
    q.options.node_limit = solve.node_limit;
    q.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(q)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(FootstepPlan, VerifyReport), CliError> {
    let sc = resolve_scene(&args.scene)?;
    let q = query(&sc, args.method.into(), args.prune.into(), &args.solve)?;
    let plan = plan_footsteps(&q)?;
    let report = verify_plan(&plan, &q.scene, &q.model);
    Ok((plan, report))
}

/// One `(scene, method, pruning)` cell of a benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCell {
    pub scene: String,
    pub method: Method,
    pub pruning: Pruning,
    pub runs: usize,
    pub successes: usize,
    pub n_steps: Option<usize>,
    pub mean_candidates: Option<f64>,
    pub trajectory_ms: Option<f64>,
    /// Formulation build and solve time: selection plus refinement.
    pub solve_ms: Option<(f64, f64)>,
    pub total_ms: Option<f64>,
    pub cost: Option<f64>,
    pub node_count: Option<f64>,
    pub trials: Option<f64>,
    /// First failure message, if any run failed.
    pub failure: Option<String>,
}

impl BenchCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub runs: usize,
    pub presolve: bool,
    pub workers: usize,
    pub cells: Vec<BenchCell>,
}

pub const BENCH_HEADER: &str = "scene,method,pruning,runs,success_rate,n_steps,avg_candidates,trajectory_ms,\
solve_ms_mean,solve_ms_std,total_ms,cost,node_count,trials,presolve,workers,status";

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let num = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        let mut out = String::from(BENCH_HEADER);
        out.push('\n');
        for c in &self.cells {
            let status = match (&c.failure, c.successes) {
                (None, _) => "ok".to_string(),
                (Some(f), 0) => format!("failed: {f}"),
                (Some(f), _) => format!("partial: {f}"),
            };
            let fields = [
                c.scene.clone(),
                c.method.name().into(),
                c.pruning.name().into(),
                c.runs.to_string(),
                format_number(c.success_rate()),
                c.n_steps.map(|n| n.to_string()).unwrap_or_default(),
                num(c.mean_candidates),
                num(c.trajectory_ms),
                num(c.solve_ms.map(|s| s.0)),
                num(c.solve_ms.map(|s| s.1)),
                num(c.total_ms),
                num(c.cost),
                num(c.node_count),
                num(c.trials),
                if self.presolve { "on" } else { "off" }.into(),
                self.workers.to_string(),
                csv_field(&status),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    let m = mean(v)?;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    Some((m, var.sqrt()))
}

/// Runs one cell `runs` times with seeds `seed, seed + 1, ...`.
pub fn bench_cell(sc: &Scenario, name: &str, method: Method, pruning: Pruning, runs: usize, solve: &SolveArgs) -> Result<BenchCell, CliError> {
    let mut plans = Vec::new();
    let mut failure = None;
    for r in 0..runs {
        let mut q = query(sc, method, pruning, solve)?;
        q.seed = solve.seed.wrapping_add(r as u64);
        match plan_footsteps(&q) {
            Ok(p) => plans.push(p),
            Err(e) => {
                failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let col = |f: &dyn Fn(&FootstepPlan) -> Option<f64>| -> Vec<f64> { plans.iter().filter_map(f).collect() };
    Ok(BenchCell {
        scene: name.to_string(),
        method,
        pruning,
        runs,
        successes: plans.len(),
        n_steps: plans.first().map(|p| p.stats.n_steps),
        mean_candidates: mean(&col(&|p| Some(p.stats.mean_candidates))),
        trajectory_ms: mean(&col(&|p| Some(p.stats.trajectory_ms))),
        solve_ms: mean_std(&col(&|p| Some(p.stats.footstep_ms + p.stats.optimisation_ms))),
        total_ms: mean(&col(&|p| Some(p.stats.total_ms()))),
        cost: mean(&col(&|p| Some(p.cost))),
        node_count: mean(&col(&|p| p.stats.node_count.map(|n| n as f64))),
        trials: mean(&col(&|p| p.stats.trials_used.map(|n| n as f64))),
        failure,
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchmarkReport, CliError> {
    if args.runs == 0 {
        return Err(CliError::Input("--runs must be at least 1".into()));
    }
    let scenes: Vec<String> = if args.scenes.is_empty() {
        DEFAULT_BENCH_SCENES.iter().map(|s| s.to_string()).collect()
    } else {
        args.scenes.clone()
    };
    let methods: Vec<Method> = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.iter().map(|&m| m.into()).collect()
    };
    let prunes: Vec<Pruning> = if args.prunes.is_empty() {
        vec![Pruning::Trajectory, Pruning::None]
    } else {
        args.prunes.iter().map(|&p| p.into()).collect()
    };
    let resolved = scenes
        .iter()
        .map(|s| resolve_scene(s).map(|sc| (s.clone(), sc)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::new();
    for (name, sc) in &resolved {
        for &pruning in &prunes {
            for &method in &methods {
                cells.push(bench_cell(sc, name, method, pruning, args.runs, &args.solve)?);
            }
        }
    }
    Ok(BenchmarkReport {
        runs: args.runs,
        presolve: args.solve.presolve == Switch::On,
        workers: 1,
        cells,
    })
}

/// `index,effector,surface,x,y,z,yaw`, one row per footstep.
pub fn footsteps_csv(plan: &FootstepPlan) -> String {
    let mut out = String::from("index,effector,surface,x,y,z,yaw\n");
    for (i, s) in plan.steps.iter().enumerate() {
        let nums = [s.position.x, s.position.y, s.position.z, s.yaw].map(format_number);
        let _ = writeln!(out, "{i},{},{},{}", s.effector, s.surface, nums.join(","));
    }
    out
}

/// `index,c0x,c0y,c0z,c1x,c1y,c1z`, the two COM waypoints of each step.
pub fn com_csv(plan: &FootstepPlan) -> String {
    let mut out = String::from("index,c0x,c0y,c0z,c1x,c1y,c1z\n");
    for (i, [a, b]) in plan.com.iter().enumerate() {
        let nums = [a.x, a.y, a.z, b.x, b.y, b.z].map(format_number);
        let _ = writeln!(out, "{i},{}", nums.join(","));
    }
    out
}

/// `surface,vertex,x,y,z`, one vertex loop per surface in id order.
pub fn surfaces_csv(scene: &Scene) -> String {
    let mut out = String::from("surface,vertex,x,y,z\n");
    for s in scene.surfaces() {
        for (k, v) in s.vertices().iter().enumerate() {
            let nums = [v.x, v.y, v.z].map(format_number);
            let _ = writeln!(out, "{},{k},{}", s.id, nums.join(","));
        }
    }
    out
}

fn read_plan(path: &Path) -> Result<FootstepPlan, CliError> {
    let text = std::fs::read_to_string(path).map_err(|_| CliError::Input(format!("plan not found: {}", path.display())))?;
    plan_from_toml(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_export(args: &ExportArgs) -> Result<String, CliError> {
    let need_plan = || {
        args.plan
            .as_deref()
            .ok_or_else(|| CliError::Input("--plan is required for this export".into()))
            .and_then(read_plan)
    };
    match args.kind {
        ExportKind::Footsteps => Ok(footsteps_csv(&need_plan()?)),
        ExportKind::Com => Ok(com_csv(&need_plan()?)),
        ExportKind::Trajectory => Ok(trajectory_csv(&need_plan()?.trajectory)),
        ExportKind::Surfaces => {
            let scene = args
                .scene
                .as_deref()
                .ok_or_else(|| CliError::Input("--scene is required for a surfaces export".into()))?;
            Ok(surfaces_csv(&resolve_scene(scene)?.scene))
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".verify.txt");
    PathBuf::from(s)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Plan(args) => {
            let start = Instant::now();
            let (plan, report) = cmd_plan(args)?;
            write_out(args.out.as_deref(), &plan_to_toml(&plan))?;
            match &args.out {
                Some(out) => write_out(Some(&report_path(out)), &report.to_text())?,
                None => eprint!("{}", report.to_text()),
            }
            eprintln!(
                "{} steps, cost {}, {} ms",
                plan.steps.len(),
                format_number(plan.cost),
                format_number(start.elapsed().as_secs_f64() * 1e3)
            );
            Ok(())
        }
        Command::Bench(args) => {
            let report = cmd_bench(args)?;
            write_out(args.out.as_deref(), &report.to_csv())
        }
        Command::Export(args) => {
            let csv = cmd_export(args)?;
            write_out(args.out.as_deref(), &csv)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
