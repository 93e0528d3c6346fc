//! Plans a guide root trajectory on each generated scene and reports the
//! step schedule it induces.

use std::time::Instant;

use footstep::guide::{discretize, rrt_plan, RootState, RrtConfig};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};

fn main() {
    for (name, model, dt) in [
        ("stairs7", RobotModel::biped(), 1.0),
        ("rubbles18", RobotModel::biped(), 1.0),
        ("bridge", RobotModel::biped(), 1.0),
        ("rubbles_stairs", RobotModel::biped(), 1.0),
        ("palette", RobotModel::quadruped(), 0.5),
    ] {
        let scenario = generate_scene(&SceneSpec::from_name(name).unwrap()).unwrap();
        let scene = &scenario.scene;
        let start = RootState::at_rest(&scenario.start, scene, &model);
        let goal = RootState::at_rest(&scenario.goal, scene, &model);
        let t0 = Instant::now();
        let traj = rrt_plan(&start, &goal, scene, &model, &RrtConfig::default()).unwrap();
        let elapsed = t0.elapsed();
        let schedule = discretize(&traj, dt, scene, &model).unwrap();
        println!(
            "{name:>15}: T = {:6.2} s, {} segments, {} steps, mean |S_i| = {:.2} of {} ({:.1} ms)",
            traj.duration(),
            traj.segments.len(),
            schedule.len(),
            schedule.mean_candidates(),
            scene.len(),
            elapsed.as_secs_f64() * 1e3
        );
    }
}
