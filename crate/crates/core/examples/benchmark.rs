//! A small benchmark table built with the same code as `footstep bench`.
//!
//! `cargo run --release --example benchmark [runs]`

use footstep::cli::{cmd_bench, BenchArgs, MethodArg, PruneArg, SolveArgs, Switch};

fn main() {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let args = BenchArgs {
        scenes: vec!["stairs5".into(), "bridge".into(), "rubbles9:2".into()],
        methods: vec![MethodArg::MipOpt, MethodArg::MipFeas, MethodArg::Sl1m],
        prunes: vec![PruneArg::Trajectory],
        runs,
        solve: SolveArgs {
            robot: None,
            dt: 1.0,
            seed: 42,
            presolve: Switch::On,
            max_trials: 4000,
            big_m: 100.0,
            node_limit: 20_000,
        },
        out: None,
    };
    print!("{}", cmd_bench(&args).unwrap().to_csv());
}
