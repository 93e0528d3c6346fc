//! Contact surfaces, H-representation polytopes and the predicates built on them.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solve::{solve_lp, Problem, Status};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("surface {id}: {reason}")]
    InvalidSurface { id: usize, reason: String },
    #[error("surface {0} is not quasi-flat for the scene friction coefficient")]
    NotQuasiFlat(usize),
    #[error("surfaces {0} and {1} intersect")]
    IntersectingSurfaces(usize, usize),
    #[error("surface ids must be contiguous from 0 (found {found} at position {position})")]
    NonContiguousIds { position: usize, found: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Equality and derived-comparison tolerances used when validating geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub equality: f64,
    pub derived: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 1e-9,
            derived: 1e-7,
        }
    }
}

/// Rotation and translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Yaw about +z followed by a translation.
    pub fn from_yaw(translation: Vec3, yaw: f64) -> Self {
        RigidTransform {
            rotation: Rotation3::from_axis_angle(&Vector3::z_axis(), yaw),
            translation,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Minimal rotation taking +z onto `normal`, composed after a yaw about +z.
pub fn surface_frame(yaw: f64, normal: &Vec3) -> Rotation3<f64> {
    let yaw_rot = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
    let n = normal.normalize();
    let tilt = Rotation3::rotation_between(&Vector3::z(), &n).unwrap_or_else(|| {
        // antiparallel: any half-turn about a horizontal axis
        Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
    });
    tilt * yaw_rot
}

/// Convex set `{x | A x <= b}` in 3D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 4]>", into = "Vec<[f64; 4]>")]
pub struct Polytope {
    a: Vec<Vec3>,
    b: Vec<f64>,
}

impl TryFrom<Vec<[f64; 4]>> for Polytope {
    type Error = GeometryError;
    fn try_from(rows: Vec<[f64; 4]>) -> Result<Self, Self::Error> {
        Polytope::from_rows(&rows)
    }
}

impl From<Polytope> for Vec<[f64; 4]> {
    fn from(p: Polytope) -> Self {
        p.rows()
    }
}

impl Polytope {
    /// Builds a polytope from `[a, b, c, d]` rows meaning `ax + by + cz <= d`,
    /// checking that it is bounded with non-empty interior.
    pub fn from_rows(rows: &[[f64; 4]]) -> Result<Self, GeometryError> {
        let p = Polytope::from_rows_unchecked(rows);
        p.check()?;
        Ok(p)
    }

    pub(crate) fn from_rows_unchecked(rows: &[[f64; 4]]) -> Self {
        Polytope {
            a: rows.iter().map(|r| Vec3::new(r[0], r[1], r[2])).collect(),
            b: rows.iter().map(|r| r[3]).collect(),
        }
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn aabb(lo: Vec3, hi: Vec3) -> Self {
        let mut rows = Vec::with_capacity(6);
        for k in 0..3 {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            e[3] = hi[k];
            rows.push(e);
            let mut e = [0.0; 4];
            e[k] = -1.0;
            e[3] = -lo[k];
            rows.push(e);
        }
        Polytope::from_rows_unchecked(&rows)
    }

    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, &b)| [a.x, a.y, a.z, b])
            .collect()
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.a
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.a.iter().any(|r| !r.iter().all(|v| v.is_finite()))
            || !self.b.iter().all(|v| v.is_finite())
        {
            return Err(GeometryError::InvalidPolytope("non-finite coefficient".into()));
        }
        // Recession cone {d | A d <= 0} must be trivial.
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut p = Problem::new(3);
                p.cost[axis] = -sign;
                for a in &self.a {
                    p.add_le(&[(0, a.x), (1, a.y), (2, a.z)], 0.0);
                }
                for j in 0..3 {
                    p.set_bounds(j, -1.0, 1.0);
                }
                let r = solve_lp(&p).map_err(|e| GeometryError::InvalidPolytope(e.to_string()))?;
                if r.status == Status::Optimal && -r.objective > 1e-9 {
                    return Err(GeometryError::InvalidPolytope("unbounded".into()));
                }
            }
        }
        if self.chebyshev_radius() <= 1e-9 {
            return Err(GeometryError::InvalidPolytope("empty interior".into()));
        }
        Ok(())
    }

    /// Radius of the largest inscribed ball (0 when empty, capped at 1e3).
    pub fn chebyshev_radius(&self) -> f64 {
        let mut p = Problem::new(4);
        p.cost[3] = -1.0;
        for (a, &b) in self.a.iter().zip(&self.b) {
            p.add_le(&[(0, a.x), (1, a.y), (2, a.z), (3, a.norm())], b);
        }
        p.set_bounds(3, 0.0, 1e3);
        match solve_lp(&p) {
            Ok(r) if r.status == Status::Optimal => r.x[3],
            _ => 0.0,
        }
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        self.a.iter().zip(&self.b).all(|(a, &b)| a.dot(p) <= b + tol)
    }

    /// `{ R x + t | x in self }` as an H-representation: `A R^T (y - t) <= b`.
    pub fn transformed(&self, tf: &RigidTransform) -> Polytope {
        let a: Vec<Vec3> = self.a.iter().map(|ai| tf.rotation * ai).collect();
        let b = a
            .iter()
            .zip(&self.b)
            .map(|(ai, &bi)| bi + ai.dot(&tf.translation))
            .collect();
        Polytope { a, b }
    }

    /// Exact vertex set: every triple of facet planes whose intersection point
    /// satisfies all rows, deduplicated at `1e-7`.
    pub fn vertices(&self) -> Vec<Vec3> {
        let k = self.a.len();
        let mut out: Vec<Vec3> = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let m = Matrix3::from_rows(&[
                        self.a[i].transpose(),
                        self.a[j].transpose(),
                        self.a[l].transpose(),
                    ]);
                    if m.determinant().abs() < 1e-12 {
                        continue;
                    }
                    let Some(inv) = m.try_inverse() else { continue };
                    let v = inv * Vec3::new(self.b[i], self.b[j], self.b[l]);
                    if self.contains(&v, 1e-9) && !out.iter().any(|w| (w - v).norm() < 1e-7) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Axis-aligned bounds of the vertex set.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(&self.vertices())
    }
}

pub(crate) fn bounds_of(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Counter-clockwise convex hull of planar points (monotone chain).
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-14 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Halfspace rows `[a, b, d]` (`a x + b y <= d`) of a counter-clockwise convex polygon.
pub fn polygon_rows_2d(hull: &[[f64; 2]]) -> Vec<[f64; 3]> {
    (0..hull.len())
        .map(|k| {
            let a = hull[k];
            let b = hull[(k + 1) % hull.len()];
            let (nx, ny) = (b[1] - a[1], a[0] - b[0]);
            let len = (nx * nx + ny * ny).sqrt();
            [nx / len, ny / len, (nx * a[0] + ny * a[1]) / len]
        })
        .collect()
}

/// The polytope rotated by `yaw` about +z and then by the minimal rotation
/// taking +z to `surface_normal`.
pub fn rotated_polytope(poly: &Polytope, yaw: f64, surface_normal: &Vec3) -> Polytope {
    poly.transformed(&RigidTransform {
        rotation: surface_frame(yaw, surface_normal),
        translation: Vec3::zeros(),
    })
}

/// A convex planar polygon `{p | p.n = e, S p <= s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactSurface {
    pub id: usize,
    normal: Vec3,
    offset: f64,
    halfspaces: Vec<[f64; 4]>,
    vertices: Vec<Vec3>,
}

impl ContactSurface {
    pub fn new(
        id: usize,
        normal: Vec3,
        offset: f64,
        halfspaces: Vec<[f64; 4]>,
    ) -> Result<Self, GeometryError> {
        let bad = |reason: &str| GeometryError::InvalidSurface {
            id,
            reason: reason.to_string(),
        };
        let len = normal.norm();
        if !(len.is_finite() && len > 1e-12) || !offset.is_finite() {
            return Err(bad("degenerate plane"));
        }
        if halfspaces.iter().flatten().any(|v| !v.is_finite()) {
            return Err(bad("non-finite halfspace"));
        }
        let normal = normal / len;
        let offset = offset / len;
        if in_plane_unbounded(&normal, &halfspaces) {
            return Err(bad("polygon is unbounded"));
        }
        let vertices = polygon_vertices(&normal, offset, &halfspaces);
        if vertices.len() < 3 {
            return Err(bad("polygon is empty or degenerate"));
        }
        let surface = ContactSurface {
            id,
            normal,
            offset,
            halfspaces,
            vertices,
        };
        if surface.area() <= 1e-8 {
            return Err(bad("polygon area below 1e-8"));
        }
        Ok(surface)
    }

    /// Builds a surface from convex polygon vertices given in either winding.
    pub fn from_polygon(id: usize, vertices: &[Vec3]) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidSurface {
                id,
                reason: "fewer than three vertices".into(),
            });
        }
        // Newell normal
        let mut n = Vec3::zeros();
        for (k, a) in vertices.iter().enumerate() {
            let b = vertices[(k + 1) % vertices.len()];
            n += a.cross(&b);
        }
        let mut verts = vertices.to_vec();
        if n.z < 0.0 {
            verts.reverse();
            n = -n;
        }
        let n = n.normalize();
        let centroid = verts.iter().sum::<Vec3>() / verts.len() as f64;
        let offset = n.dot(&centroid);
        let mut rows = Vec::with_capacity(verts.len());
        for k in 0..verts.len() {
            let a = verts[k];
            let b = verts[(k + 1) % verts.len()];
            let out = (b - a).cross(&n).normalize();
            rows.push([out.x, out.y, out.z, out.dot(&a)]);
        }
        ContactSurface::new(id, n, offset, rows)
    }

    /// Axis-aligned horizontal rectangle at height `z`.
    pub fn rectangle(id: usize, x: (f64, f64), y: (f64, f64), z: f64) -> Result<Self, GeometryError> {
        ContactSurface::from_polygon(
            id,
            &[
                Vec3::new(x.0, y.0, z),
                Vec3::new(x.1, y.0, z),
                Vec3::new(x.1, y.1, z),
                Vec3::new(x.0, y.1, z),
            ],
        )
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn halfspaces(&self) -> &[[f64; 4]] {
        &self.halfspaces
    }

    /// Polygon vertices, counter-clockwise about the normal.
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut a = Vec3::zeros();
        for k in 1..v.len() - 1 {
            a += (v[k] - v[0]).cross(&(v[k + 1] - v[0]));
        }
        0.5 * a.dot(&self.normal).abs()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(&self.vertices)
    }

    /// Height of the surface plane above `(x, y)`.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        (self.offset - self.normal.x * x - self.normal.y * y) / self.normal.z
    }

    /// Whether the vertical projection of the polygon contains `(x, y)`.
    pub fn contains_xy(&self, x: f64, y: f64, tol: f64) -> bool {
        let p = Vec3::new(x, y, self.height_at(x, y));
        self.halfspaces
            .iter()
            .all(|r| r[0] * p.x + r[1] * p.y + r[2] * p.z <= r[3] + tol)
    }

    /// Horizontal distance from `(x, y)` to the projected polygon (0 inside).
    pub fn distance_xy(&self, x: f64, y: f64) -> f64 {
        if self.contains_xy(x, y, 0.0) {
            return 0.0;
        }
        let p = nalgebra::Vector2::new(x, y);
        let v = &self.vertices;
        (0..v.len())
            .map(|k| {
                let a = v[k].xy();
                let b = v[(k + 1) % v.len()].xy();
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
                (a + ab * t - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// True iff `p` lies on the surface plane and inside its bounding halfspaces.
pub fn surface_contains(surface: &ContactSurface, p: &Vec3, tol: f64) -> bool {
    (p.dot(&surface.normal) - surface.offset).abs() <= tol
        && surface
            .halfspaces
            .iter()
            .all(|r| r[0] * p.x + r[1] * p.y + r[2] * p.z <= r[3] + tol)
}

/// True iff the surface normal lies inside the friction cone around +z.
pub fn quasi_flat(surface: &ContactSurface, mu: f64) -> bool {
    let tilt = surface.normal.z.clamp(-1.0, 1.0).acos();
    tilt <= mu.atan() + 1e-9
}

/// Whether the posed polytope and the surface polygon share a point.
pub fn polytope_surface_intersects(
    poly: &Polytope,
    pose: &RigidTransform,
    surface: &ContactSurface,
) -> bool {
    posed_polytope_intersects(&poly.transformed(pose), None, surface)
}

/// Intersection test for an already posed polytope; `bounds` is an optional
/// bounding box of the posed polytope used to skip the LP on clear misses.
pub(crate) fn posed_polytope_intersects(
    posed: &Polytope,
    bounds: Option<&(Vec3, Vec3)>,
    surface: &ContactSurface,
) -> bool {
    if let Some((lo, hi)) = bounds {
        let (slo, shi) = surface.bounds();
        for k in 0..3 {
            if slo[k] > hi[k] + 1e-9 || shi[k] < lo[k] - 1e-9 {
                return false;
            }
        }
    }
    let mut p = Problem::new(3);
    for (a, &b) in posed.a.iter().zip(&posed.b) {
        p.add_le(&[(0, a.x), (1, a.y), (2, a.z)], b);
    }
    for r in &surface.halfspaces {
        p.add_le(&[(0, r[0]), (1, r[1]), (2, r[2])], r[3]);
    }
    let n = surface.normal;
    p.add_eq(&[(0, n.x), (1, n.y), (2, n.z)], surface.offset);
    matches!(solve_lp(&p), Ok(r) if r.status == Status::Optimal)
}

fn in_plane_basis(normal: &Vec3) -> (Vec3, Vec3) {
    let helper = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = normal.cross(&helper).normalize();
    let v = normal.cross(&u);
    (u, v)
}

fn in_plane_unbounded(normal: &Vec3, rows: &[[f64; 4]]) -> bool {
    let (u, v) = in_plane_basis(normal);
    for dir in [u, -u, v, -v] {
        let mut p = Problem::new(3);
        p.cost = vec![-dir.x, -dir.y, -dir.z];
        for r in rows {
            p.add_le(&[(0, r[0]), (1, r[1]), (2, r[2])], 0.0);
        }
        p.add_eq(&[(0, normal.x), (1, normal.y), (2, normal.z)], 0.0);
        for j in 0..3 {
            p.set_bounds(j, -1.0, 1.0);
        }
        if let Ok(r) = solve_lp(&p) {
            if r.status == Status::Optimal && -r.objective > 1e-9 {
                return true;
            }
        }
    }
    false
}

fn polygon_vertices(normal: &Vec3, offset: f64, rows: &[[f64; 4]]) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let m = Matrix3::from_rows(&[
                normal.transpose(),
                Vec3::new(rows[i][0], rows[i][1], rows[i][2]).transpose(),
                Vec3::new(rows[j][0], rows[j][1], rows[j][2]).transpose(),
            ]);
            if m.determinant().abs() < 1e-12 {
                continue;
            }
            let Some(inv) = m.try_inverse() else { continue };
            let p = inv * Vec3::new(offset, rows[i][3], rows[j][3]);
            let inside = rows
                .iter()
                .all(|r| r[0] * p.x + r[1] * p.y + r[2] * p.z <= r[3] + 1e-9);
            if inside && !pts.iter().any(|q| (q - p).norm() < 1e-7) {
                pts.push(p);
            }
        }
    }
    if pts.len() < 3 {
        return pts;
    }
    let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let (u, v) = in_plane_basis(normal);
    pts.sort_by(|a, b| {
        let ta = (a - c).dot(&v).atan2((a - c).dot(&u));
        let tb = (b - c).dot(&v).atan2((b - c).dot(&u));
        ta.total_cmp(&tb)
    });
    pts
}

/// Whether two surfaces share a point in both relative interiors. Touching
/// along a boundary is allowed.
fn surfaces_overlap(a: &ContactSurface, b: &ContactSurface, margin: f64) -> bool {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    for k in 0..3 {
        if alo[k] > bhi[k] + 1e-9 || blo[k] > ahi[k] + 1e-9 {
            return false;
        }
    }
    // max t s.t. x on both planes and t inside every bounding row
    let mut p = Problem::new(4);
    p.cost[3] = -1.0;
    for s in [a, b] {
        for r in &s.halfspaces {
            let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            p.add_le(&[(0, r[0]), (1, r[1]), (2, r[2]), (3, norm)], r[3]);
        }
        let n = s.normal;
        p.add_eq(&[(0, n.x), (1, n.y), (2, n.z)], s.offset);
    }
    p.set_bounds(3, f64::NEG_INFINITY, 1.0);
    match solve_lp(&p) {
        Ok(r) if r.status == Status::Optimal => r.x[3] > margin,
        _ => false,
    }
}

/// A set of pairwise disjoint quasi-flat contact surfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    friction: f64,
    surfaces: Vec<ContactSurface>,
    pub tolerances: Tolerances,
}

impl Scene {
    pub fn new(
        name: impl Into<String>,
        friction: f64,
        surfaces: Vec<ContactSurface>,
    ) -> Result<Self, GeometryError> {
        Scene::with_tolerances(name, friction, surfaces, Tolerances::default())
    }

    pub fn with_tolerances(
        name: impl Into<String>,
        friction: f64,
        surfaces: Vec<ContactSurface>,
        tolerances: Tolerances,
    ) -> Result<Self, GeometryError> {
        if !(friction > 0.0 && friction.is_finite()) {
            return Err(GeometryError::InvalidScene("friction must be positive".into()));
        }
        for (k, s) in surfaces.iter().enumerate() {
            if s.id != k {
                return Err(GeometryError::NonContiguousIds {
                    position: k,
                    found: s.id,
                });
            }
            if !quasi_flat(s, friction) {
                return Err(GeometryError::NotQuasiFlat(s.id));
            }
        }
        for i in 0..surfaces.len() {
            for j in i + 1..surfaces.len() {
                if surfaces_overlap(&surfaces[i], &surfaces[j], tolerances.derived) {
                    return Err(GeometryError::IntersectingSurfaces(i, j));
                }
            }
        }
        Ok(Scene {
            name: name.into(),
            friction,
            surfaces,
            tolerances,
        })
    }

    pub fn friction(&self) -> f64 {
        self.friction
    }

    pub fn surfaces(&self) -> &[ContactSurface] {
        &self.surfaces
    }

    pub fn surface(&self, id: usize) -> &ContactSurface {
        &self.surfaces[id]
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let pts: Vec<Vec3> = self
            .surfaces
            .iter()
            .flat_map(|s| s.vertices().iter().copied())
            .collect();
        bounds_of(&pts)
    }

    /// The highest surface whose projection contains `(x, y)`, or failing
    /// that the horizontally closest one.
    pub fn surface_under(&self, x: f64, y: f64) -> Option<&ContactSurface> {
        let covering = self
            .surfaces
            .iter()
            .filter(|s| s.contains_xy(x, y, 1e-9))
            .max_by(|a, b| a.height_at(x, y).total_cmp(&b.height_at(x, y)));
        covering.or_else(|| {
            self.surfaces
                .iter()
                .min_by(|a, b| a.distance_xy(x, y).total_cmp(&b.distance_xy(x, y)))
        })
    }

    /// Terrain height under `(x, y)` following [`Scene::surface_under`].
    pub fn height_under(&self, x: f64, y: f64) -> f64 {
        match self.surface_under(x, y) {
            Some(s) if s.contains_xy(x, y, 1e-9) => s.height_at(x, y),
            Some(s) => s.centroid().z,
            None => 0.0,
        }
    }
}
