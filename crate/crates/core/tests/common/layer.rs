//! Single-case checks of the reachability rows against test-side geometry.
//! Each returns `Ok(Some(inside))`, `Ok(None)` when the sample is too close
//! to a boundary to judge, or `Err` on disagreement.

use footstep::formulation::DEFAULT_BIG_M;
use footstep::geometry::{ContactSurface, Scene, Vec3};
use footstep::reachability::{
    com_kinematic_rows, equilibrium_rows, quadruped_com_substitution, relative_foot_rows, Candidate, Contact,
    PhaseVars, PointRef,
};
use footstep::scenario::RobotModel;

use super::{frame, in_convex_hull_2d};

pub type CaseResult = Result<Option<bool>, String>;

const ALPHA: usize = 9;
const BOX_MARGIN: f64 = 1e-7;

const BIPED_COM: ([f64; 3], [f64; 3]) = ([-0.25, -0.25, 0.5], [0.25, 0.25, 1.0]);
const BIPED_LEFT_REL: ([f64; 3], [f64; 3]) = ([-0.5, 0.1, -0.3], [0.5, 0.45, 0.3]);
const BIPED_SOLE: [(f64, f64); 4] = [(-0.1, -0.06), (0.1, -0.06), (0.1, 0.06), (-0.1, 0.06)];

/// Surface orientation and headings of one sampled phase.
#[derive(Clone, Copy, Debug)]
pub struct Pose {
    pub tilt: f64,
    pub azimuth: f64,
    pub yaw_moving: f64,
    pub yaw_support: f64,
}

impl Pose {
    fn normal(&self) -> Vec3 {
        let (t, a) = (self.tilt, self.azimuth);
        Vec3::new(t.sin() * a.cos(), t.sin() * a.sin(), t.cos())
    }

    fn scene(&self) -> Scene {
        let r = frame(0.0, &self.normal());
        let verts: Vec<Vec3> = [(-2.0, -2.0), (2.0, -2.0), (2.0, 2.0), (-2.0, 2.0)]
            .iter()
            .map(|&(u, v)| r * Vec3::new(u, v, 0.0))
            .collect();
        Scene::new("pad", 0.5, vec![ContactSurface::from_polygon(0, &verts).unwrap()]).unwrap()
    }
}

// columns: com0 0..3, com1 3..6, moving foot 6..9, alpha 9; support fixed
fn phase(support: Vec3, pose: &Pose) -> PhaseVars {
    let cand = vec![Candidate {
        surface: 0,
        selection: Some(ALPHA),
    }];
    let moving = Contact {
        effector: 0,
        position: PointRef::Cols([6, 7, 8]),
        yaw: pose.yaw_moving,
        candidates: cand.clone(),
    };
    let support = Contact {
        effector: 1,
        position: PointRef::Fixed(support),
        yaw: pose.yaw_support,
        candidates: cand,
    };
    PhaseVars {
        step: 0,
        effector: 0,
        com: [[0, 1, 2], [3, 4, 5]],
        moving: moving.clone(),
        support: support.clone(),
        stance: vec![moving, support],
    }
}

fn columns(com0: Vec3, com1: Vec3, foot: Vec3, alpha: f64) -> Vec<f64> {
    let mut x = vec![0.0; 10];
    x[0..3].copy_from_slice(com0.as_slice());
    x[3..6].copy_from_slice(com1.as_slice());
    x[6..9].copy_from_slice(foot.as_slice());
    x[ALPHA] = alpha;
    x
}

fn in_box(u: &Vec3, (lo, hi): ([f64; 3], [f64; 3])) -> Option<bool> {
    let depth = (0..3).map(|k| (u[k] - lo[k]).min(hi[k] - u[k])).fold(f64::INFINITY, f64::min);
    if depth.abs() <= BOX_MARGIN {
        None
    } else {
        Some(depth > 0.0)
    }
}

fn and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn compare(expected: Option<bool>, violation: f64) -> CaseResult {
    match expected {
        Some(inside) if inside != (violation <= 1e-9) => {
            Err(format!("expected inside = {inside}, row violation {violation:e}"))
        }
        e => Ok(e),
    }
}

/// With the selection slack at 1, every row holds anywhere in a 10 m cube.
pub fn relaxed(pose: &Pose, com0: Vec3, com1: Vec3, foot: Vec3, support: Vec3) -> CaseResult {
    let scene = pose.scene();
    let m = RobotModel::biped();
    let ph = phase(support, pose);
    let x = columns(com0, com1, foot, 1.0);
    for rows in [
        equilibrium_rows(&ph, &m, &scene, DEFAULT_BIG_M),
        com_kinematic_rows(&ph, &m, &scene, DEFAULT_BIG_M),
        relative_foot_rows(&ph, &m, &scene, DEFAULT_BIG_M),
    ] {
        let v = rows.max_violation(&x);
        if v > 0.0 {
            return Err(format!("relaxed row violated by {v:e}"));
        }
    }
    Ok(Some(true))
}

/// Active COM rows against the rotated COM workspace of both contacts.
/// `u0`, `u1` place the COM points around the moving foot's workspace.
pub fn com_active(pose: &Pose, foot: Vec3, offset: Vec3, u0: [f64; 3], u1: [f64; 3]) -> CaseResult {
    let scene = pose.scene();
    let n = pose.normal();
    let support = foot + offset;
    let ph = phase(support, pose);
    let r = frame(pose.yaw_moving, &n);
    let rs = frame(pose.yaw_support, &n);
    let com0 = foot + r * Vec3::new(u0[0], u0[1], 0.75 + u0[2] * 1.1);
    let com1 = foot + r * Vec3::new(u1[0], u1[1], 0.75 + u1[2] * 1.1);
    let mut expected = Some(true);
    for c in [com0, com1] {
        expected = and(expected, in_box(&(r.transpose() * (c - foot)), BIPED_COM));
        expected = and(expected, in_box(&(rs.transpose() * (c - support)), BIPED_COM));
    }
    let rows = com_kinematic_rows(&ph, &RobotModel::biped(), &scene, DEFAULT_BIG_M);
    compare(expected, rows.max_violation(&columns(com0, com1, foot, 0.0)))
}

/// Active relative-foot rows against the polytope rotated into the support frame.
pub fn relative_active(pose: &Pose, support: Vec3, u: [f64; 3]) -> CaseResult {
    let scene = pose.scene();
    let r = frame(pose.yaw_support, &pose.normal());
    let ph = phase(support, pose);
    let foot = support + r * Vec3::new(u[0], u[1] + 0.25, u[2] * 0.6);
    let rows = relative_foot_rows(&ph, &RobotModel::biped(), &scene, DEFAULT_BIG_M);
    let expected = in_box(&(r.transpose() * (foot - support)), BIPED_LEFT_REL);
    compare(expected, rows.max_violation(&columns(Vec3::zeros(), Vec3::zeros(), foot, 0.0)))
}

/// Active equilibrium rows against the xy shadow of the rotated sole.
pub fn equilibrium_active(pose: &Pose, foot: Vec3, support: Vec3, d0: [f64; 2], d1: [f64; 2]) -> CaseResult {
    let scene = pose.scene();
    let n = pose.normal();
    let ph = phase(support, pose);
    let com0 = support + Vec3::new(d0[0], d0[1], 0.8);
    let com1 = foot + Vec3::new(d1[0], d1[1], 0.8);
    let sole = |yaw: f64| -> Vec<[f64; 2]> {
        let r = frame(yaw, &n);
        BIPED_SOLE
            .iter()
            .map(|&(a, b)| {
                let q = r * Vec3::new(a, b, 0.0);
                [q.x, q.y]
            })
            .collect()
    };
    let expected = and(
        in_convex_hull_2d(&sole(pose.yaw_support), d0, BOX_MARGIN),
        in_convex_hull_2d(&sole(pose.yaw_moving), d1, BOX_MARGIN),
    );
    let rows = equilibrium_rows(&ph, &RobotModel::biped(), &scene, DEFAULT_BIG_M);
    compare(expected, rows.max_violation(&columns(com0, com1, foot, 0.0)))
}

/// Eleven evenly spaced points of a COM segment whose ends satisfy the
/// active COM rows (support colocated with the moving foot). `None` when an
/// end falls outside.
pub fn segment(pose: &Pose, foot: Vec3, u0: [f64; 3], u1: [f64; 3]) -> CaseResult {
    let scene = pose.scene();
    let n = pose.normal();
    let r = frame(pose.yaw_moving, &n);
    let rs = frame(pose.yaw_support, &n);
    let ph = phase(foot, pose);
    let inner = |u: [f64; 3]| Vec3::new(u[0] * 0.2, u[1] * 0.2, 0.75 + u[2] * 0.2);
    let (a, b) = (foot + r * inner(u0), foot + r * inner(u1));
    let ok = |c: &Vec3| {
        in_box(&(r.transpose() * (c - foot)), BIPED_COM) == Some(true)
            && in_box(&(rs.transpose() * (c - foot)), BIPED_COM) == Some(true)
    };
    if !(ok(&a) && ok(&b)) {
        return Ok(None);
    }
    let rows = com_kinematic_rows(&ph, &RobotModel::biped(), &scene, DEFAULT_BIG_M);
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let c = a * (1.0 - t) + b * t;
        let v = rows.max_violation(&columns(c, c, foot, 0.0));
        if v > 1e-9 {
            return Err(format!("segment point t = {t} violates by {v:e}"));
        }
    }
    Ok(Some(true))
}

/// Quadruped substitution rows: zero residual at the crawl averages (1/3 on
/// the three supports before touchdown, 1/4 on all feet after), and a
/// residual equal to an offset applied to the post-touchdown COM.
pub fn substitution(k: usize, feet: [[f64; 3]; 4], dx: f64) -> CaseResult {
    let m = RobotModel::quadruped();
    // columns: com0 0..3, com1 3..6, feet 6..18
    let contact = |e: usize| Contact {
        effector: e,
        position: PointRef::Cols([6 + 3 * e, 7 + 3 * e, 8 + 3 * e]),
        yaw: 0.0,
        candidates: vec![Candidate {
            surface: 0,
            selection: None,
        }],
    };
    let pred = m.gait_predecessor(k);
    let ph = PhaseVars {
        step: 0,
        effector: k,
        com: [[0, 1, 2], [3, 4, 5]],
        moving: contact(k),
        support: contact(pred),
        stance: (0..4).map(contact).collect(),
    };
    let rows = quadruped_com_substitution(&ph, &m);
    if rows.len() != 4 {
        return Err(format!("{} substitution rows", rows.len()));
    }
    let mut x = vec![0.0; 18];
    for e in 0..4 {
        x[6 + 3 * e..9 + 3 * e].copy_from_slice(&feet[e]);
    }
    for ax in 0..2 {
        x[ax] = (0..4).filter(|&e| e != k).map(|e| feet[e][ax]).sum::<f64>() / 3.0;
        x[3 + ax] = (0..4).map(|e| feet[e][ax]).sum::<f64>() / 4.0;
    }
    x[2] = 7.0;
    x[5] = -7.0;
    let at_average = rows.max_violation(&x);
    if at_average > 1e-12 {
        return Err(format!("residual {at_average:e} at the crawl average"));
    }
    x[3] += dx;
    let shifted = rows.max_violation(&x);
    if (shifted - dx).abs() > 1e-12 {
        return Err(format!("residual {shifted:e} for an offset of {dx:e}"));
    }
    Ok(Some(true))
}
