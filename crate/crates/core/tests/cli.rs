mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::scenario;
use footstep::cli::BENCH_HEADER;
use footstep::geometry::{ContactSurface, Scene};
use footstep::scenario::{save_scenario, RootPose, Scenario};

fn footstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_footstep")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn plan_then_export() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("stairs.toml");
    let plan_s = plan.to_str().unwrap();
    let o = footstep(&["plan", "--scene", "stairs3", "--method", "mip-opt", "--out", plan_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("stairs.toml.verify.txt")).unwrap();
    assert!(!report.is_empty() && report.lines().all(|l| l.contains(" pass ")), "{report}");

    let text = std::fs::read_to_string(&plan).unwrap();
    let n_steps = footstep::pipeline::plan_from_toml(&text).unwrap().steps.len();
    for (kind, expected) in [("footsteps", Some(n_steps)), ("com", Some(n_steps)), ("trajectory", None)] {
        let out = dir.path().join(format!("{kind}.csv"));
        let o = footstep(&["export", kind, "--plan", plan_s, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{kind}: {}", stderr(&o));
        let r = rows(&out);
        match expected {
            Some(n) => assert_eq!(r.len(), n, "{kind}"),
            None => assert!(r.len() > 2, "{kind}"),
        }
    }
}

#[test]
fn surfaces_export_lists_every_vertex_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("surfaces.csv");
    let o = footstep(&["export", "surfaces", "--scene", "rubbles9:2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&out);
    let scene = scenario("rubbles9:2").scene;
    let total: usize = scene.surfaces().iter().map(|s| s.vertices().len()).sum();
    assert_eq!(r.len(), total);
    for row in r {
        let id: usize = row[0].parse().unwrap();
        let k: usize = row[1].parse().unwrap();
        let v = scene.surface(id).vertices()[k];
        for ax in 0..3 {
            let got: f64 = row[2 + ax].parse().unwrap();
            assert!((got - v[ax]).abs() <= 1e-8 * v[ax].abs().max(1.0), "surface {id} vertex {k}");
        }
    }
}

#[test]
fn input_errors_exit_with_one() {
    let o = footstep(&["plan", "--scene", "no/such/scene.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scene not found"), "{}", stderr(&o));
    assert_eq!(footstep(&["plan", "--scene", "stairs3", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(footstep(&["export", "footsteps"]).status.code(), Some(1));
    assert_eq!(footstep(&["plan", "--scene", "stairs3", "--dt=-1"]).status.code(), Some(1));
    assert_eq!(footstep(&["--help"]).status.code(), Some(0));
}

#[test]
fn disconnected_goal_fails_in_the_guide() {
    let dir = tempfile::tempdir().unwrap();
    let a = ContactSurface::rectangle(0, (-1.0, 1.0), (-1.0, 1.0), 0.0).unwrap();
    let b = ContactSurface::rectangle(1, (4.0, 6.0), (-1.0, 1.0), 0.0).unwrap();
    let sc = Scenario {
        scene: Scene::new("islands", 0.5, vec![a, b]).unwrap(),
        start: RootPose::new(0.0, 0.0, 0.0),
        goal: RootPose::new(5.0, 0.0, 0.0),
    };
    let path = dir.path().join("islands.toml");
    std::fs::write(&path, save_scenario(&sc)).unwrap();
    let o = footstep(&["plan", "--scene", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("stage=guide"), "{}", stderr(&o));
}

#[test]
fn bench_is_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = footstep(&[
            "bench", "--scene", "stairs3", "--scene", "bridge", "--method", "mip-feas", "--method", "sl1m",
            "--prune", "trajectory", "--runs", "2", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    let header: Vec<&str> = BENCH_HEADER.split(',').collect();
    assert_eq!(a.lines().next().unwrap(), BENCH_HEADER);
    let keep = |text: &str| -> Vec<Vec<String>> {
        text.lines()
            .skip(1)
            .map(|l| {
                l.split(',')
                    .zip(&header)
                    .filter(|(_, h)| !h.ends_with("_ms") && !h.contains("_ms_"))
                    .map(|(v, _)| v.to_string())
                    .collect()
            })
            .collect()
    };
    assert_eq!(keep(&a).len(), 4);
    assert_eq!(keep(&a), keep(&b));
    assert!(a.lines().skip(1).all(|l| l.ends_with(",ok")), "{a}");
}
