//! Contact surfaces and reachability polytopes: building a tilted surface,
//! enumerating polytope vertices, posing a range of motion and testing which
//! surfaces it touches.

use footstep::geometry::{
    polytope_surface_intersects, rotated_polytope, surface_contains, ContactSurface, Polytope, RigidTransform, Vec3,
};
use footstep::scenario::RobotModel;

fn main() {
    let ramp = ContactSurface::from_polygon(
        0,
        &[
            Vec3::new(0.0, -0.5, 0.0),
            Vec3::new(1.0, -0.5, 0.2),
            Vec3::new(1.0, 0.5, 0.2),
            Vec3::new(0.0, 0.5, 0.0),
        ],
    )
    .unwrap();
    let n = ramp.normal();
    println!("ramp normal ({:.3}, {:.3}, {:.3}), area {:.3}", n.x, n.y, n.z, ramp.area());
    println!("height at x = 0.5: {:.3}", ramp.height_at(0.5, 0.0));
    println!("contains (0.5, 0, 0.1): {}", surface_contains(&ramp, &Vec3::new(0.5, 0.0, 0.1), 1e-9));

    let cube = Polytope::aabb(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
    let tilted = rotated_polytope(&cube, 0.3, n);
    println!("rotated cube: {} facets, {} vertices", tilted.len(), tilted.vertices().len());

    let model = RobotModel::biped();
    let rom = &model.feet[0].rom;
    for z in [0.8, 1.0, 1.4] {
        let pose = RigidTransform::from_yaw(Vec3::new(0.5, -0.1, z), 0.0);
        println!("left range of motion at root height {z}: touches ramp = {}", polytope_surface_intersects(rom, &pose, &ramp));
    }
}
