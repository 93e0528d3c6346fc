//! Surface selection by the L1 relaxation: per-step slacks of the first LP,
//! the decision taken from them, and the reweighted variant.
//!
//! `cargo run --release --example sl1m_selection [scene]`

use footstep::formulation::{build_instance, BuildOptions, Mode};
use footstep::pipeline::{plan_schedule, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};
use footstep::solve::{reweighted_l1, sl1m_solve, Sl1mOptions};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "stairs5".into());
    let sc = generate_scene(&SceneSpec::from_name(&name).expect("scene name")).unwrap();
    let q = PlanQuery::from_scenario(&sc, RobotModel::biped());
    let (schedule, _) = plan_schedule(&q).unwrap();
    let inst = build_instance(&schedule, &sc.scene, &q.model, Mode::Sl1m, &BuildOptions::default()).unwrap();

    let out = sl1m_solve(&inst, &Sl1mOptions::default()).unwrap();
    println!("{name}: {:?}, relaxed objective {:.6}, {} trials", out.status, out.relaxed_objective, out.trials_used);
    for (i, st) in inst.layout.steps.iter().enumerate() {
        let slacks: Vec<String> = st.candidates.iter().map(|c| format!("s{}={:.3}", c.0, out.x[c.2])).collect();
        let chosen = out.selection.as_ref().map(|s| s[i].to_string()).unwrap_or_else(|| "-".into());
        println!("  step {i:>2} effector {}: {:<40} -> {chosen}", schedule.steps[i].effector, slacks.join(" "));
    }

    let rw = reweighted_l1(&inst, 5, 1e-3, &Sl1mOptions::default()).unwrap();
    println!(
        "reweighted: {:?}, same selection = {}, trace {:?}",
        rw.status,
        rw.selection == out.selection,
        rw.objective_trace.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
    );
}
