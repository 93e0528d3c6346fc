//! Candidate-surface pruning and the linear feasibility rows tying COM points
//! and footsteps together.

use thiserror::Error;

use crate::geometry::{
    convex_hull_2d, polygon_rows_2d, posed_polytope_intersects, rotated_polytope, surface_frame,
    ContactSurface, Polytope, RigidTransform, Scene, Vec3,
};
use crate::scenario::RobotModel;
use crate::solve::Problem;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReachError {
    #[error("no surface intersects the range of motion of effector {effector}")]
    EmptyCandidates { effector: usize },
}

/// Surfaces whose intersection with the posed range of motion of effector `k`
/// is non-empty, in ascending id order.
pub fn candidate_surfaces(
    root_pose: &RigidTransform,
    k: usize,
    scene: &Scene,
    model: &RobotModel,
) -> Result<Vec<usize>, ReachError> {
    let posed = model.feet[k].rom.transformed(root_pose);
    let bounds = posed.bounds();
    let ids: Vec<usize> = scene
        .surfaces()
        .iter()
        .filter(|s| posed_polytope_intersects(&posed, Some(&bounds), s))
        .map(|s| s.id)
        .collect();
    if ids.is_empty() {
        Err(ReachError::EmptyCandidates { effector: k })
    } else {
        Ok(ids)
    }
}

/// Whether at least one surface is reachable by effector `k` (stops at the first hit).
pub fn has_candidate(root_pose: &RigidTransform, k: usize, scene: &Scene, model: &RobotModel) -> bool {
    let posed = model.feet[k].rom.transformed(root_pose);
    let bounds = posed.bounds();
    scene
        .surfaces()
        .iter()
        .any(|s| posed_polytope_intersects(&posed, Some(&bounds), s))
}

/// A 3D point that is either three solver columns or a fixed value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointRef {
    Cols([usize; 3]),
    Fixed(Vec3),
}

/// One possible surface for a contact, with its selection column (`None` when
/// the surface is imposed, as for the initial stance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub surface: usize,
    pub selection: Option<usize>,
}

/// A foot placement together with the orientation data its rows depend on.
#[derive(Clone, Debug, PartialEq)]
pub struct Contact {
    pub effector: usize,
    pub position: PointRef,
    pub yaw: f64,
    pub candidates: Vec<Candidate>,
}

/// Everything the row builders need about one step.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVars {
    pub step: usize,
    pub effector: usize,
    /// COM before and after touchdown.
    pub com: [[usize; 3]; 2],
    /// The newly placed foot.
    pub moving: Contact,
    /// Latest contact of the effector that moved just before (gait predecessor).
    pub support: Contact,
    /// Latest contact of every effector after touchdown, indexed by effector.
    pub stance: Vec<Contact>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// `terms . x  (<= | =)  rhs + m * x[slack]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub slack: Option<(usize, f64)>,
}

impl Row {
    /// Signed violation at `x` (positive when violated).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.terms.iter().map(|&(j, a)| a * x[j]).sum();
        let rhs = self.rhs + self.slack.map_or(0.0, |(j, m)| m * x[j]);
        match self.relation {
            Relation::Le => lhs - rhs,
            Relation::Eq => (lhs - rhs).abs(),
        }
    }

    /// Appends the row to a problem, moving the slack term to the left.
    pub fn add_to(&self, p: &mut Problem) {
        let mut terms = self.terms.clone();
        if let Some((j, m)) = self.slack {
            terms.push((j, -m));
        }
        match self.relation {
            Relation::Le => p.add_le(&terms, self.rhs),
            Relation::Eq => p.add_eq(&terms, self.rhs),
        }
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.1.abs())
            .chain([self.rhs.abs(), self.slack.map_or(0.0, |s| s.1.abs())])
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintRows {
    pub rows: Vec<Row>,
}

impl ConstraintRows {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: ConstraintRows) {
        self.rows.extend(other.rows);
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max)
    }

    /// `a . (u - v) <= b + m * slack`, with `a` restricted to the given axes.
    fn push_difference(
        &mut self,
        a: &[f64],
        b: f64,
        u: &PointRef,
        v: &PointRef,
        slack: Option<(usize, f64)>,
    ) {
        let mut terms = Vec::with_capacity(2 * a.len());
        let mut rhs = b;
        for (axis, &coef) in a.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            match u {
                PointRef::Cols(c) => terms.push((c[axis], coef)),
                PointRef::Fixed(p) => rhs -= coef * p[axis],
            }
            match v {
                PointRef::Cols(c) => terms.push((c[axis], -coef)),
                PointRef::Fixed(p) => rhs += coef * p[axis],
            }
        }
        self.rows.push(Row {
            terms,
            relation: Relation::Le,
            rhs,
            slack,
        });
    }
}

/// Unit-normalized rows of a polytope rotated into a candidate's frame.
fn oriented_rows(poly: &Polytope, yaw: f64, surface: &ContactSurface) -> Vec<([f64; 3], f64)> {
    let r = rotated_polytope(poly, yaw, surface.normal());
    r.normals()
        .iter()
        .zip(r.offsets())
        .map(|(a, &b)| {
            let n = a.norm();
            ([a.x / n, a.y / n, a.z / n], b / n)
        })
        .collect()
}

/// Support polygon of a foot (xy rows) once placed on `surface` with heading `yaw`.
pub fn oriented_foot_polygon(model: &RobotModel, k: usize, yaw: f64, surface: &ContactSurface) -> Vec<[f64; 3]> {
    let sole: Vec<[f64; 2]> = model.feet[k].foot_shape.vertices().iter().map(|v| [v.x, v.y]).collect();
    let frame = surface_frame(yaw, surface.normal());
    let rotated: Vec<[f64; 2]> = convex_hull_2d(&sole)
        .iter()
        .map(|p| {
            let q = frame * Vec3::new(p[0], p[1], 0.0);
            [q.x, q.y]
        })
        .collect();
    polygon_rows_2d(&convex_hull_2d(&rotated))
}

fn slack_of(c: &Candidate, big_m: f64) -> Option<(usize, f64)> {
    c.selection.map(|j| (j, big_m))
}

/// COM above the support polygon: the pre-touchdown COM over the support
/// foot, the post-touchdown COM over the new foot (xy only).
pub fn equilibrium_rows(phase: &PhaseVars, model: &RobotModel, scene: &Scene, big_m: f64) -> ConstraintRows {
    let mut out = ConstraintRows::default();
    for (contact, com) in [(&phase.support, phase.com[0]), (&phase.moving, phase.com[1])] {
        for cand in &contact.candidates {
            let surface = scene.surface(cand.surface);
            for r in oriented_foot_polygon(model, contact.effector, contact.yaw, surface) {
                out.push_difference(
                    &[r[0], r[1], 0.0],
                    r[2],
                    &PointRef::Cols(com),
                    &contact.position,
                    slack_of(cand, big_m),
                );
            }
        }
    }
    out
}

/// Both COM points inside the COM workspace of every current contact.
pub fn com_kinematic_rows(phase: &PhaseVars, model: &RobotModel, scene: &Scene, big_m: f64) -> ConstraintRows {
    let mut out = ConstraintRows::default();
    for com in phase.com {
        for contact in &phase.stance {
            let poly = &model.feet[contact.effector].com_kin;
            for cand in &contact.candidates {
                for (a, b) in oriented_rows(poly, contact.yaw, scene.surface(cand.surface)) {
                    out.push_difference(&a, b, &PointRef::Cols(com), &contact.position, slack_of(cand, big_m));
                }
            }
        }
    }
    out
}

/// The new foot inside the relative-foot polytope of the previously moved one.
pub fn relative_foot_rows(phase: &PhaseVars, model: &RobotModel, scene: &Scene, big_m: f64) -> ConstraintRows {
    let mut out = ConstraintRows::default();
    let poly = &model.feet[phase.effector].rel_foot;
    let support = &phase.support;
    for cand in &support.candidates {
        for (a, b) in oriented_rows(poly, support.yaw, scene.surface(cand.surface)) {
            out.push_difference(&a, b, &phase.moving.position, &support.position, slack_of(cand, big_m));
        }
    }
    out
}

/// Quadruped COM as a fixed convex combination of the current feet (xy):
/// pre-touchdown weights on the supports, post-touchdown weights on all feet.
pub fn quadruped_com_substitution(phase: &PhaseVars, model: &RobotModel) -> ConstraintRows {
    let mut out = ConstraintRows::default();
    let Some(weights) = &model.quad_weights else {
        return out;
    };
    let w = &weights[model.gait_phase(phase.effector)];
    for (m, wm) in [(0, &w.pre), (1, &w.post)] {
        for axis in 0..2 {
            let mut terms = vec![(phase.com[m][axis], 1.0)];
            let mut rhs = 0.0;
            for contact in &phase.stance {
                let we = wm[contact.effector];
                if we == 0.0 {
                    continue;
                }
                match contact.position {
                    PointRef::Cols(c) => terms.push((c[axis], -we)),
                    PointRef::Fixed(p) => rhs += we * p[axis],
                }
            }
            out.rows.push(Row {
                terms,
                relation: Relation::Eq,
                rhs,
                slack: None,
            });
        }
    }
    out
}

/// All reachability rows of one phase for the model's leg count.
pub fn phase_rows(phase: &PhaseVars, model: &RobotModel, scene: &Scene, big_m: f64) -> ConstraintRows {
    let mut rows = if model.n_feet == 4 {
        quadruped_com_substitution(phase, model)
    } else {
        equilibrium_rows(phase, model, scene, big_m)
    };
    rows.extend(com_kinematic_rows(phase, model, scene, big_m));
    rows.extend(relative_foot_rows(phase, model, scene, big_m));
    rows
}
