//! Exact selection by branch and bound, with and without presolve, checked
//! against exhaustive enumeration of every surface combination.
//!
//! `cargo run --release --example branch_and_bound [scene]`

use std::time::Instant;

use footstep::formulation::{build_instance, BuildOptions, Mode, DEFAULT_BIG_M};
use footstep::pipeline::{brute_force_oracle, plan_schedule, OracleObjective, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};
use footstep::solve::{branch_and_bound, BnbOptions};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "stairs4".into());
    let sc = generate_scene(&SceneSpec::from_name(&name).expect("scene name")).unwrap();
    let q = PlanQuery::from_scenario(&sc, RobotModel::biped());
    let (schedule, _) = plan_schedule(&q).unwrap();
    println!("{name}: {} steps, {} combinations", schedule.len(), schedule.combinations());

    for mode in [Mode::MipOpt, Mode::MipFeas] {
        let inst = build_instance(&schedule, &sc.scene, &q.model, mode, &BuildOptions::default()).unwrap();
        for presolve in [true, false] {
            let opts = BnbOptions {
                presolve,
                first_incumbent: mode == Mode::MipFeas,
                ..Default::default()
            };
            let t = Instant::now();
            let (r, stats) = branch_and_bound(&inst.problem, &opts).unwrap();
            println!(
                "{mode:?} presolve {presolve:<5}: {:?} objective {:.6}, {} nodes, root integral {}, {:.1} ms",
                r.status,
                r.objective,
                stats.node_count,
                stats.root_integral,
                t.elapsed().as_secs_f64() * 1e3
            );
        }
    }

    let t = Instant::now();
    let o = brute_force_oracle(&schedule, &sc.scene, &q.model, OracleObjective::Quadratic, DEFAULT_BIG_M).unwrap();
    println!(
        "enumeration: best {:.6} over {} feasible of {} selections, {:.1} ms",
        o.cost,
        o.feasible_count,
        o.evaluated,
        t.elapsed().as_secs_f64() * 1e3
    );
}
