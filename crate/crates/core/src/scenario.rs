//! Robot models, scene generators and the TOML scene/robot file formats.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ContactSurface, GeometryError, Polytope, Scene, Vec3};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

impl From<GeometryError> for ScenarioError {
    fn from(e: GeometryError) -> Self {
        ScenarioError::Validation(e.to_string())
    }
}

/// Planar root pose: position and heading; height follows the terrain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct RootPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl RootPose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        RootPose { x, y, yaw }
    }
}

impl From<[f64; 3]> for RootPose {
    fn from(v: [f64; 3]) -> Self {
        RootPose::new(v[0], v[1], v[2])
    }
}

impl From<RootPose> for [f64; 3] {
    fn from(p: RootPose) -> Self {
        [p.x, p.y, p.yaw]
    }
}

/// Per-effector constraint polytopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FootModel {
    pub name: String,
    /// Nominal foot position in the root frame (x, y).
    pub stance: [f64; 2],
    /// Contact patch, a thin prism around the sole in the foot frame.
    pub foot_shape: Polytope,
    /// Reachable foot positions relative to the root frame.
    pub rom: Polytope,
    /// Reachable COM positions relative to this foot.
    pub com_kin: Polytope,
    /// Reachable positions of this foot relative to the previously moved one.
    pub rel_foot: Polytope,
}

/// COM averaging weights for one gait phase of a quadruped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseWeights {
    /// Before touchdown (moving foot in the air).
    pub pre: Vec<f64>,
    /// After touchdown.
    pub post: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub n_feet: usize,
    pub gait: Vec<usize>,
    pub nominal_height: f64,
    pub com_vel_max: [f64; 3],
    pub com_acc_max: [f64; 3],
    pub feet: Vec<FootModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_weights: Option<Vec<PhaseWeights>>,
}

fn aabb(lo: [f64; 3], hi: [f64; 3]) -> Polytope {
    Polytope::aabb(Vec3::from(lo), Vec3::from(hi))
}

impl RobotModel {
    /// Two-legged model with box-shaped reachability polytopes.
    pub fn biped() -> Self {
        let foot_shape = aabb([-0.1, -0.06, -0.01], [0.1, 0.06, 0.01]);
        let com_kin = aabb([-0.25, -0.25, 0.5], [0.25, 0.25, 1.0]);
        let feet = [("left", 1.0), ("right", -1.0)]
            .into_iter()
            .map(|(name, side)| {
                let (ylo, yhi) = if side > 0.0 { (0.0, 0.5) } else { (-0.5, 0.0) };
                let (rlo, rhi) = if side > 0.0 { (0.1, 0.45) } else { (-0.45, -0.1) };
                FootModel {
                    name: name.into(),
                    stance: [0.0, 0.1 * side],
                    foot_shape: foot_shape.clone(),
                    rom: aabb([-0.35, ylo, -1.1], [0.35, yhi, -0.6]),
                    com_kin: com_kin.clone(),
                    rel_foot: aabb([-0.5, rlo, -0.3], [0.5, rhi, 0.3]),
                }
            })
            .collect();
        RobotModel {
            name: "biped-default".into(),
            n_feet: 2,
            gait: vec![0, 1],
            nominal_height: 0.85,
            com_vel_max: [0.2, 0.2, 0.2],
            com_acc_max: [0.3, 0.3, 0.3],
            feet,
            quad_weights: None,
        }
    }

    /// Four-legged model walking with a crawl gait (LF, RH, RF, LH).
    pub fn quadruped() -> Self {
        let stance = [[0.35, 0.2], [0.35, -0.2], [-0.35, 0.2], [-0.35, -0.2]];
        let names = ["lf", "rf", "lh", "rh"];
        let gait = vec![0, 3, 1, 2];
        let pred = |k: usize| {
            let g = gait.iter().position(|&e| e == k).unwrap();
            gait[(g + gait.len() - 1) % gait.len()]
        };
        let feet = (0..4)
            .map(|k| {
                let [sx, sy] = stance[k];
                let [px, py] = stance[pred(k)];
                let (dx, dy) = (sx - px, sy - py);
                FootModel {
                    name: names[k].into(),
                    stance: stance[k],
                    foot_shape: aabb([-0.03, -0.03, -0.01], [0.03, 0.03, 0.01]),
                    rom: aabb([sx - 0.25, sy - 0.15, -0.75], [sx + 0.25, sy + 0.15, -0.35]),
                    com_kin: aabb([-sx - 0.3, -sy - 0.25, 0.35], [-sx + 0.3, -sy + 0.25, 0.75]),
                    rel_foot: aabb([dx - 0.35, dy - 0.15, -0.25], [dx + 0.35, dy + 0.15, 0.25]),
                }
            })
            .collect();
        let quad_weights = gait
            .iter()
            .map(|&k| PhaseWeights {
                pre: (0..4).map(|e| if e == k { 0.0 } else { 1.0 / 3.0 }).collect(),
                post: vec![0.25; 4],
            })
            .collect();
        RobotModel {
            name: "quadruped-default".into(),
            n_feet: 4,
            gait,
            nominal_height: 0.55,
            com_vel_max: [0.15, 0.15, 0.15],
            com_acc_max: [0.3, 0.3, 0.3],
            feet,
            quad_weights: Some(quad_weights),
        }
    }

    /// Effector that moved immediately before `k` in the gait cycle.
    pub fn gait_predecessor(&self, k: usize) -> usize {
        let g = self.gait.iter().position(|&e| e == k).expect("effector in gait");
        self.gait[(g + self.gait.len() - 1) % self.gait.len()]
    }

    /// Position of `k` in the gait cycle.
    pub fn gait_phase(&self, k: usize) -> usize {
        self.gait.iter().position(|&e| e == k).expect("effector in gait")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Validation(m));
        if self.n_feet != 2 && self.n_feet != 4 {
            return bad(format!("n_feet must be 2 or 4, got {}", self.n_feet));
        }
        if self.feet.len() != self.n_feet {
            return bad(format!("expected {} feet blocks, got {}", self.n_feet, self.feet.len()));
        }
        let mut seen = vec![false; self.n_feet];
        for &k in &self.gait {
            if k >= self.n_feet || seen[k] {
                return bad("gait must list every effector exactly once".into());
            }
            seen[k] = true;
        }
        if self.gait.len() != self.n_feet {
            return bad("gait must list every effector exactly once".into());
        }
        let positive = |v: &[f64; 3]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&self.com_vel_max) || !positive(&self.com_acc_max) {
            return bad("com_vel_max and com_acc_max must be positive".into());
        }
        if !(self.nominal_height > 0.0) {
            return bad("nominal_height must be positive".into());
        }
        for f in &self.feet {
            for (what, p) in [
                ("foot_shape", &f.foot_shape),
                ("rom", &f.rom),
                ("com_kin", &f.com_kin),
                ("rel_foot", &f.rel_foot),
            ] {
                Polytope::from_rows(&p.rows())
                    .map_err(|e| ScenarioError::Validation(format!("foot {} {what}: {e}", f.name)))?;
            }
        }
        match (&self.quad_weights, self.n_feet) {
            (None, 4) => return bad("quadruped models need quad_weights".into()),
            (Some(w), _) => {
                if w.len() != self.gait.len() {
                    return bad("quad_weights needs one entry per gait phase".into());
                }
                for (g, phase) in w.iter().enumerate() {
                    for v in [&phase.pre, &phase.post] {
                        let sum: f64 = v.iter().sum();
                        if v.len() != self.n_feet || v.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                            return bad(format!("quad_weights phase {g} must be {} non-negative weights summing to 1", self.n_feet));
                        }
                    }
                    if phase.pre[self.gait[g]] != 0.0 {
                        return bad(format!("quad_weights phase {g}: the moving foot cannot carry weight before touchdown"));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A scene together with the start and goal root poses.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub scene: Scene,
    pub start: RootPose,
    pub goal: RootPose,
}

/// Parameterized terrain generators.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneSpec {
    /// `steps` contiguous treads of uniform rise and run. A non-zero
    /// `variant` redraws rise and run from that seed.
    Stairs { steps: usize, rise: f64, run: f64, variant: u64 },
    /// `pads` tilted square pads on a three-column grid.
    Rubbles { pads: usize, tilt: f64, seed: u64 },
    /// Two platforms joined by a narrow beam. A non-zero `variant` redraws
    /// the beam length, width and end gaps from that seed.
    Bridge { variant: u64 },
    /// A rubble field followed by a staircase.
    RubblesStairs {
        pads: usize,
        tilt: f64,
        seed: u64,
        steps: usize,
        rise: f64,
        run: f64,
    },
    /// Flat ground interrupted by a raised pallet, sized for the quadruped.
    Palette,
    /// A single flat pad with the goal `length` metres ahead.
    Flat { length: f64 },
}

pub const DEFAULT_FRICTION: f64 = 0.5;

impl SceneSpec {
    /// Parses generator names such as `stairs7`, `rubbles18`, `rubbles18:3`
    /// (seed 3), `bridge`, `bridge:2` (variant 2), `rubbles_stairs`,
    /// `palette` or `flat3`.
    pub fn from_name(name: &str) -> Option<SceneSpec> {
        let (base, suffix) = match name.split_once(':') {
            Some((b, s)) => (b, Some(s.parse::<u64>().ok()?)),
            None => (name, None),
        };
        let seed = suffix.unwrap_or(1);
        let variant = suffix.unwrap_or(0);
        let digits = base.trim_start_matches(|c: char| c.is_ascii_alphabetic() || c == '_');
        let kind = &base[..base.len() - digits.len()];
        let count = if digits.is_empty() { None } else { Some(digits.parse::<usize>().ok()?) };
        Some(match kind {
            "stairs" => SceneSpec::Stairs {
                steps: count.unwrap_or(7),
                rise: 0.1,
                run: 0.3,
                variant,
            },
            "rubbles" => SceneSpec::Rubbles {
                pads: count.unwrap_or(18),
                tilt: 0.2,
                seed,
            },
            "bridge" if count.is_none() => SceneSpec::Bridge { variant },
            "rubbles_stairs" => SceneSpec::RubblesStairs {
                pads: count.unwrap_or(9),
                tilt: 0.2,
                seed,
                steps: 4,
                rise: 0.1,
                run: 0.3,
            },
            "palette" if count.is_none() => SceneSpec::Palette,
            "flat" => SceneSpec::Flat {
                length: count.unwrap_or(3) as f64,
            },
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            SceneSpec::Stairs { steps, variant: 0, .. } => format!("stairs{steps}"),
            SceneSpec::Stairs { steps, variant, .. } => format!("stairs{steps}:{variant}"),
            SceneSpec::Rubbles { pads, seed, .. } => format!("rubbles{pads}:{seed}"),
            SceneSpec::Bridge { variant: 0 } => "bridge".into(),
            SceneSpec::Bridge { variant } => format!("bridge:{variant}"),
            SceneSpec::RubblesStairs { pads, seed, .. } => format!("rubbles_stairs{pads}:{seed}"),
            SceneSpec::Palette => "palette".into(),
            SceneSpec::Flat { length } => format!("flat{length}"),
        }
    }
}

fn check_tilt(tilt: f64, mu: f64) -> Result<(), ScenarioError> {
    if !(0.0..=mu.atan()).contains(&tilt) {
        return Err(ScenarioError::InvalidParams(format!(
            "tilt {tilt} rad is outside [0, atan(mu) = {:.6}]",
            mu.atan()
        )));
    }
    Ok(())
}

fn stairs(steps: usize, rise: f64, run: f64, x0: f64, z0: f64, first_id: usize) -> Result<Vec<ContactSurface>, ScenarioError> {
    if steps == 0 || !(run > 0.0) || !rise.is_finite() {
        return Err(ScenarioError::InvalidParams("stairs need steps >= 1 and run > 0".into()));
    }
    (0..steps)
        .map(|i| {
            let x = x0 + i as f64 * run;
            Ok(ContactSurface::rectangle(first_id + i, (x, x + run), (-0.5, 0.5), z0 + i as f64 * rise)?)
        })
        .collect()
}

const PAD_PITCH: f64 = 0.4;
const PAD_HALF: f64 = 0.175;

fn rubbles(pads: usize, tilt: f64, seed: u64, mu: f64) -> Result<Vec<ContactSurface>, ScenarioError> {
    check_tilt(tilt, mu)?;
    if pads == 0 {
        return Err(ScenarioError::InvalidParams("rubbles need at least one pad".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = pads.div_ceil(3);
    (0..pads)
        .map(|i| {
            let (row, col) = (i / 3, i % 3);
            let cx = row as f64 * PAD_PITCH;
            let cy = (col as f64 - 1.0) * PAD_PITCH;
            let flat = row == 0 || row + 1 == rows;
            let (h, n) = if flat {
                (0.0, Vec3::z())
            } else {
                let h = rng.gen_range(0.0..0.1);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                (h, Vec3::new(tilt.sin() * phi.cos(), tilt.sin() * phi.sin(), tilt.cos()))
            };
            let corners: Vec<Vec3> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .iter()
                .map(|&(sx, sy)| {
                    let (dx, dy) = (sx * PAD_HALF, sy * PAD_HALF);
                    Vec3::new(cx + dx, cy + dy, h - (n.x * dx + n.y * dy) / n.z)
                })
                .collect();
            Ok(ContactSurface::from_polygon(i, &corners)?)
        })
        .collect()
}

/// Builds the scene and start/goal poses for a generator.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scenario, ScenarioError> {
    let mu = DEFAULT_FRICTION;
    let (surfaces, start, goal) = match *spec {
        SceneSpec::Stairs {
            steps,
            rise,
            run,
            variant,
        } => {
            let (rise, run) = if variant == 0 {
                (rise, run)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(variant);
                (rng.gen_range(0.06..0.14), rng.gen_range(0.26..0.36))
            };
            let s = stairs(steps, rise, run, 0.0, 0.0, 0)?;
            let goal_x = (steps as f64 - 0.5) * run;
            (s, RootPose::new(0.5 * run, 0.0, 0.0), RootPose::new(goal_x, 0.0, 0.0))
        }
        SceneSpec::Rubbles { pads, tilt, seed } => {
            let s = rubbles(pads, tilt, seed, mu)?;
            let last_row = (pads.div_ceil(3) - 1) as f64;
            (s, RootPose::new(0.0, 0.0, 0.0), RootPose::new(last_row * PAD_PITCH, 0.0, 0.0))
        }
        SceneSpec::Bridge { variant } => {
            let (length, half_width, gap) = if variant == 0 {
                (1.5, 0.15, 0.05)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(variant);
                (rng.gen_range(1.2..1.8), rng.gen_range(0.14..0.2), rng.gen_range(0.03..0.08))
            };
            let end = gap + length;
            let s = vec![
                ContactSurface::rectangle(0, (-1.0, 0.0), (-0.5, 0.5), 0.0)?,
                ContactSurface::rectangle(1, (gap, end), (-half_width, half_width), 0.0)?,
                ContactSurface::rectangle(2, (end + gap, end + gap + 1.0), (-0.5, 0.5), 0.0)?,
            ];
            (s, RootPose::new(-0.5, 0.0, 0.0), RootPose::new(end + gap + 0.5, 0.0, 0.0))
        }
        SceneSpec::RubblesStairs {
            pads,
            tilt,
            seed,
            steps,
            rise,
            run,
        } => {
            let mut s = rubbles(pads, tilt, seed, mu)?;
            let rows = pads.div_ceil(3) as f64;
            let x0 = (rows - 1.0) * PAD_PITCH + PAD_HALF + 0.05;
            s.extend(stairs(steps, rise, run, x0, rise, s.len())?);
            let goal_x = x0 + (steps as f64 - 0.5) * run;
            (s, RootPose::new(0.0, 0.0, 0.0), RootPose::new(goal_x, 0.0, 0.0))
        }
        SceneSpec::Palette => {
            let s = vec![
                ContactSurface::rectangle(0, (-1.0, 0.6), (-0.6, 0.6), 0.0)?,
                ContactSurface::rectangle(1, (0.65, 1.45), (-0.6, 0.6), 0.1)?,
                ContactSurface::rectangle(2, (1.5, 3.2), (-0.6, 0.6), 0.0)?,
            ];
            (s, RootPose::new(-0.3, 0.0, 0.0), RootPose::new(2.4, 0.0, 0.0))
        }
        SceneSpec::Flat { length } => {
            if !(length >= 0.0) {
                return Err(ScenarioError::InvalidParams("flat length must be >= 0".into()));
            }
            let s = vec![ContactSurface::rectangle(0, (-1.0, length + 1.0), (-1.0, 1.0), 0.0)?];
            (s, RootPose::new(0.0, 0.0, 0.0), RootPose::new(length, 0.0, 0.0))
        }
    };
    let scene = Scene::new(spec.name(), mu, surfaces)?;
    Ok(Scenario { scene, start, goal })
}

#[derive(Serialize, Deserialize)]
struct SurfaceDoc {
    id: usize,
    normal: [f64; 3],
    offset: f64,
    halfspaces: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    name: String,
    friction: f64,
    start: RootPose,
    goal: RootPose,
    surfaces: Vec<SurfaceDoc>,
}

fn parse_error(text: &str, e: toml::de::Error) -> ScenarioError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    ScenarioError::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Parses and validates a scene document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    let surfaces = doc
        .surfaces
        .into_iter()
        .map(|s| ContactSurface::new(s.id, Vec3::from(s.normal), s.offset, s.halfspaces))
        .collect::<Result<Vec<_>, _>>()?;
    let scene = Scene::new(doc.name, doc.friction, surfaces)?;
    Ok(Scenario {
        scene,
        start: doc.start,
        goal: doc.goal,
    })
}

/// Serializes a scenario; floats use shortest round-trip formatting.
pub fn save_scenario(s: &Scenario) -> String {
    let doc = ScenarioDoc {
        name: s.scene.name.clone(),
        friction: s.scene.friction(),
        start: s.start,
        goal: s.goal,
        surfaces: s
            .scene
            .surfaces()
            .iter()
            .map(|c| SurfaceDoc {
                id: c.id,
                normal: [c.normal().x, c.normal().y, c.normal().z],
                offset: c.offset(),
                halfspaces: c.halfspaces().to_vec(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario serializes")
}

pub fn load_robot(text: &str) -> Result<RobotModel, ScenarioError> {
    let model: RobotModel = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    model.validate()?;
    Ok(model)
}

pub fn save_robot(model: &RobotModel) -> String {
    toml::to_string(model).expect("robot model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        let s = generate_scene(&SceneSpec::from_name("stairs7").unwrap()).unwrap();
        assert_eq!(s.scene.len(), 7);
        let r = generate_scene(&SceneSpec::Rubbles { pads: 18, tilt: 0.2, seed: 1 }).unwrap();
        assert_eq!(r.scene.len(), 18);
        let one = generate_scene(&SceneSpec::Stairs { steps: 1, rise: 0.1, run: 0.3, variant: 0 }).unwrap();
        assert_eq!(one.scene.len(), 1);
        assert_eq!(generate_scene(&SceneSpec::Bridge { variant: 0 }).unwrap().scene.len(), 3);
        let rs = generate_scene(&SceneSpec::from_name("rubbles_stairs").unwrap()).unwrap();
        assert_eq!(rs.scene.len(), 13);
    }

    #[test]
    fn steep_rubble_rejected() {
        let e = generate_scene(&SceneSpec::Rubbles { pads: 9, tilt: 0.6, seed: 1 });
        assert!(matches!(e, Err(ScenarioError::InvalidParams(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SceneSpec::Rubbles { pads: 18, tilt: 0.2, seed: 5 };
        assert_eq!(generate_scene(&spec).unwrap(), generate_scene(&spec).unwrap());
        let other = generate_scene(&SceneSpec::Rubbles { pads: 18, tilt: 0.2, seed: 6 }).unwrap();
        assert_ne!(generate_scene(&spec).unwrap(), other);
    }

    #[test]
    fn names_parse() {
        assert_eq!(
            SceneSpec::from_name("rubbles12:4"),
            Some(SceneSpec::Rubbles { pads: 12, tilt: 0.2, seed: 4 })
        );
        assert_eq!(SceneSpec::from_name("bridge"), Some(SceneSpec::Bridge { variant: 0 }));
        assert_eq!(SceneSpec::from_name("moon"), None);
        assert_eq!(SceneSpec::from_name("stairs"), SceneSpec::from_name("stairs7"));
        for n in ["stairs5:3", "bridge:2", "bridge", "rubbles9:7"] {
            assert_eq!(SceneSpec::from_name(n).unwrap().name(), n);
        }
    }

    #[test]
    fn default_models_validate() {
        RobotModel::biped().validate().unwrap();
        RobotModel::quadruped().validate().unwrap();
        let q = RobotModel::quadruped();
        assert_eq!(q.gait_predecessor(0), 2);
        assert_eq!(q.gait_predecessor(3), 0);
    }

    #[test]
    fn robot_round_trip() {
        for m in [RobotModel::biped(), RobotModel::quadruped()] {
            assert_eq!(load_robot(&save_robot(&m)).unwrap(), m);
        }
    }

    #[test]
    fn broken_gait_rejected() {
        let mut m = RobotModel::biped();
        m.gait = vec![0, 0];
        assert!(matches!(m.validate(), Err(ScenarioError::Validation(_))));
    }

    #[test]
    fn parse_error_has_position() {
        let text = "name = \"x\"\nfriction = 0.5\nstart = [0, 0\n";
        match load_scenario(text) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line >= 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
