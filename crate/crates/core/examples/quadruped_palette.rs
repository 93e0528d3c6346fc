//! Crawl-gait quadruped stepping onto a raised pallet. The COM is not a free
//! variable here: each waypoint is the average of the feet on the ground.

use footstep::pipeline::{plan_footsteps, verify_plan, Method, PlanQuery};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};

fn main() {
    let sc = generate_scene(&SceneSpec::Palette).unwrap();
    let model = RobotModel::quadruped();
    for method in [Method::MipFeas, Method::Sl1m] {
        let mut q = PlanQuery::from_scenario(&sc, model.clone());
        q.method = method;
        q.dt = 0.5;
        let plan = plan_footsteps(&q).unwrap();
        let report = verify_plan(&plan, &sc.scene, &model);
        println!(
            "{}: {} steps, cost {:.4}, com substitution residual {:.1e}",
            method.name(),
            plan.steps.len(),
            plan.cost,
            report.get("com_substitution").map_or(f64::NAN, |c| c.residual)
        );
        for (st, com) in plan.steps.iter().zip(&plan.com) {
            println!(
                "  {:<3} on {} at ({:.3}, {:.3}, {:.3})  com ({:.3}, {:.3}) -> ({:.3}, {:.3})",
                model.feet[st.effector].name,
                st.surface,
                st.position.x,
                st.position.y,
                st.position.z,
                com[0].x,
                com[0].y,
                com[1].x,
                com[1].y
            );
        }
    }
}
