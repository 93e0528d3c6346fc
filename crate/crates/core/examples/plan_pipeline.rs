//! The whole pipeline on one scene: guide, schedule, selection, refinement
//! and verification, then the plan file and CSV exports.
//!
//! `cargo run --release --example plan_pipeline [scene] [method]`

use footstep::cli::{com_csv, footsteps_csv};
use footstep::pipeline::{plan_footsteps, plan_to_toml, verify_plan, Method, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "stairs7".into());
    let method = std::env::args()
        .nth(2)
        .map(|m| Method::parse(&m).expect("mip-opt, mip-feas, sl1m or sl1m-rw"))
        .unwrap_or(Method::Sl1m);
    let sc = generate_scene(&SceneSpec::from_name(&name).expect("scene name")).unwrap();
    let mut q = PlanQuery::from_scenario(&sc, RobotModel::biped());
    q.method = method;
    let plan = match plan_footsteps(&q) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let s = &plan.stats;
    println!(
        "{name} {}: {} steps, mean |S| {:.2}, cost {:.6}, guide {:.1} ms, selection {:.1} ms, refinement {:.1} ms",
        method.name(),
        s.n_steps,
        s.mean_candidates,
        plan.cost,
        s.trajectory_ms,
        s.footstep_ms,
        s.optimisation_ms
    );
    print!("{}", verify_plan(&plan, &sc.scene, &q.model).to_text());
    print!("{}", footsteps_csv(&plan));
    print!("{}", com_csv(&plan));
    let toml = plan_to_toml(&plan);
    println!("plan file: {} lines", toml.lines().count());
}
