//! Generates each scene kind, writes scene and robot files to a temporary
//! directory and reads them back.
//!
//! `cargo run --example scenario_files [scene ...]`

use footstep::scenario::{generate_scene, load_robot, load_scenario, save_robot, save_scenario, RobotModel, SceneSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names = if args.is_empty() {
        ["stairs7", "rubbles18", "bridge", "rubbles_stairs", "palette", "stairs5:3"].map(String::from).to_vec()
    } else {
        args
    };
    let dir = std::env::temp_dir().join("footstep-scenes");
    std::fs::create_dir_all(&dir).unwrap();
    for name in &names {
        let sc = generate_scene(&SceneSpec::from_name(name).expect("scene name")).unwrap();
        let path = dir.join(format!("{}.toml", name.replace(':', "_")));
        std::fs::write(&path, save_scenario(&sc)).unwrap();
        let back = load_scenario(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let (lo, hi) = back.scene.bounds();
        println!(
            "{name:>15}: {:>2} surfaces, x {:.2}..{:.2}, z {:.2}..{:.2}, start ({:.2}, {:.2}) goal ({:.2}, {:.2}) -> {}",
            back.scene.len(),
            lo.x,
            hi.x,
            lo.z,
            hi.z,
            back.start.x,
            back.start.y,
            back.goal.x,
            back.goal.y,
            path.display()
        );
    }
    for model in [RobotModel::biped(), RobotModel::quadruped()] {
        let path = dir.join(format!("{}.toml", model.name));
        std::fs::write(&path, save_robot(&model)).unwrap();
        let back = load_robot(&std::fs::read_to_string(&path).unwrap()).unwrap();
        println!("{}: {} feet, gait {:?} -> {}", back.name, back.n_feet, back.gait, path.display());
    }
}
