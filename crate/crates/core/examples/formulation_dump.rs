//! Builds the selection problem of a small staircase in every mode and
//! prints its size and the start of the LP-style listing.
//!
//! `cargo run --example formulation_dump [scene] [lines]`

use footstep::formulation::{build_instance, dump_instance, BuildOptions, Mode};
use footstep::pipeline::{plan_schedule, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "stairs3".into());
    let lines: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(25);
    let sc = generate_scene(&SceneSpec::from_name(&name).expect("scene name")).unwrap();
    let q = PlanQuery::from_scenario(&sc, RobotModel::biped());
    let (schedule, _) = plan_schedule(&q).unwrap();
    println!("{name}: {} steps, candidates {:?}", schedule.len(), schedule.steps.iter().map(|s| &s.candidates).collect::<Vec<_>>());
    for mode in [Mode::MipOpt, Mode::MipFeas, Mode::Sl1m] {
        let inst = build_instance(&schedule, &sc.scene, &q.model, mode, &BuildOptions::default()).unwrap();
        let p = &inst.problem;
        println!(
            "{mode:?}: {} columns ({} binary), {} inequalities, {} equalities, {} nonzeros",
            p.n,
            p.integer.iter().filter(|&&b| b).count(),
            p.ineq.len(),
            p.eq.len(),
            p.ineq.nnz() + p.eq.nnz()
        );
    }
    let inst = build_instance(&schedule, &sc.scene, &q.model, Mode::Sl1m, &BuildOptions::default()).unwrap();
    for line in dump_instance(&inst).lines().take(lines) {
        println!("  {line}");
    }
}
