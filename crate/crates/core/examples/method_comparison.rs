//! Runs every planning method with and without trajectory pruning on the
//! generated scenes and prints cost, node counts and timings.
//!
//! `cargo run --release --example method_comparison [scene ...]`

use footstep::pipeline::{plan_footsteps, Method, PlanQuery, Pruning};
use footstep::scenario::{generate_scene, RobotModel, SceneSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenes = if args.is_empty() {
        vec!["stairs7".to_string(), "rubbles18".into(), "bridge".into(), "rubbles_stairs".into()]
    } else {
        args
    };
    println!(
        "{:<16} {:<9} {:<10} {:>5} {:>6} {:>10} {:>7} {:>7} {:>10}",
        "scene", "method", "pruning", "n", "|S|", "cost", "nodes", "trials", "ms"
    );
    for name in &scenes {
        let spec = SceneSpec::from_name(name).expect("scene name");
        let sc = generate_scene(&spec).expect("scene");
        let model = if name.starts_with("palette") {
            RobotModel::quadruped()
        } else {
            RobotModel::biped()
        };
        for pruning in [Pruning::Trajectory, Pruning::None] {
            for method in Method::ALL {
                let mut q = PlanQuery::from_scenario(&sc, model.clone());
                q.method = method;
                q.pruning = pruning;
                if model.quad_weights.is_some() {
                    q.dt = 0.5;
                }
                match plan_footsteps(&q) {
                    Ok(p) => println!(
                        "{:<16} {:<9} {:<10} {:>5} {:>6.2} {:>10.5} {:>7} {:>7} {:>10.2}",
                        name,
                        method.name(),
                        pruning.name(),
                        p.stats.n_steps,
                        p.stats.mean_candidates,
                        p.cost,
                        p.stats.node_count.map_or("-".into(), |n| n.to_string()),
                        p.stats.trials_used.map_or("-".into(), |n| n.to_string()),
                        p.stats.footstep_ms + p.stats.optimisation_ms,
                    ),
                    Err(e) => println!("{:<16} {:<9} {:<10} failed: {e}", name, method.name(), pruning.name()),
                }
            }
        }
    }
}
