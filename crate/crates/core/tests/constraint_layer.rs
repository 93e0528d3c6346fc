mod common;

use common::layer::{self, Pose};
use common::pruned_schedule;
use footstep::formulation::{build_fixed, phases, DEFAULT_BIG_M};
use footstep::geometry::Vec3;
use footstep::pipeline::{plan_footsteps, PlanQuery};
use footstep::reachability::com_kinematic_rows;
use footstep::scenario::RobotModel;
use proptest::prelude::*;

fn pose() -> impl Strategy<Value = Pose> {
    (0.0..0.4f64, -3.2..3.2f64, -3.2..3.2f64, -3.2..3.2f64).prop_map(|(tilt, azimuth, yaw_moving, yaw_support)| Pose {
        tilt,
        azimuth,
        yaw_moving,
        yaw_support,
    })
}

fn v3(r: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-r..r).prop_map(Vec3::from)
}

fn unit3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn relaxed_rows_accept_anything_in_the_workspace(
        p in pose(), a in v3(5.0), b in v3(5.0), c in v3(5.0), d in v3(5.0),
    ) {
        prop_assert_eq!(layer::relaxed(&p, a, b, c, d), Ok(Some(true)));
    }

    #[test]
    fn active_com_rows_are_the_rotated_workspace(
        p in pose(), foot in v3(1.0), off in v3(0.05),
        u0 in prop::array::uniform3(-0.3..0.3f64), u1 in prop::array::uniform3(-0.3..0.3f64),
    ) {
        let r = layer::com_active(&p, foot, off, u0, u1);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn active_relative_rows_are_the_rotated_polytope(
        p in pose(), support in v3(1.0), u in prop::array::uniform3(-0.7..0.7f64),
    ) {
        let r = layer::relative_active(&p, support, u);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn active_equilibrium_rows_are_the_rotated_sole(
        p in pose(), foot in v3(1.0), support in v3(1.0),
        d0 in prop::array::uniform2(-0.15..0.15f64), d1 in prop::array::uniform2(-0.15..0.15f64),
    ) {
        let r = layer::equilibrium_active(&p, foot, support, d0, d1);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn com_segments_stay_in_the_workspace(p in pose(), foot in v3(1.0), u0 in unit3(), u1 in unit3()) {
        let r = layer::segment(&p, foot, u0, u1);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn quadruped_com_is_the_crawl_average(
        k in 0usize..4, feet in prop::array::uniform4(prop::array::uniform3(-2.0..2.0f64)), dx in 0.01..0.5f64,
    ) {
        prop_assert_eq!(layer::substitution(k, feet, dx), Ok(Some(true)));
    }
}

#[test]
fn planned_com_segments_respect_every_phase() {
    let (sc, _) = pruned_schedule("stairs4");
    let m = RobotModel::biped();
    let plan = plan_footsteps(&PlanQuery::from_scenario(&sc, m.clone())).unwrap();
    let inst = build_fixed(&plan.schedule, &plan.selection(), &sc.scene, &m, DEFAULT_BIG_M, false).unwrap();
    let mut x = inst.problem.lower.clone();
    for (i, cols) in inst.layout.steps.iter().enumerate() {
        for ax in 0..3 {
            x[cols.foot[ax]] = plan.steps[i].position[ax];
        }
    }
    for (i, ph) in phases(&plan.schedule, &inst.layout, &m).iter().enumerate() {
        let rows = com_kinematic_rows(ph, &m, &sc.scene, DEFAULT_BIG_M);
        let [a, b] = plan.com[i];
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let c = a * (1.0 - t) + b * t;
            for slot in ph.com {
                for ax in 0..3 {
                    x[slot[ax]] = c[ax];
                }
            }
            assert!(rows.max_violation(&x) <= 1e-6, "phase {i}, t = {t}");
        }
    }
}
