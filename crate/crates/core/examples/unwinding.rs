//! Cancels a robot's rotation in the camera frame and shows which camera
//! and robot combinations allow it.
//!
//! ```text
//! cargo run --example unwinding
//! ```

use unwind_sim::geometry::{capability_check, unwind_point, unwind_rotation, viewpoint_heading};
use unwind_sim::{PlanarRotation, Rotation3, RotationSet, Vec3, ViewMode};

fn main() {
    // a drone pitched and rolled: only a full SO(3) camera can cancel this
    let robot = Rotation3::from_axis_angle(Vec3::new(1.0, 1.0, 0.3).normalized().unwrap(), 0.8);
    let camera = unwind_rotation(&robot);
    let residual = (robot * camera).max_abs_diff(&Rotation3::yaw(0.0));
    println!("R_R * R_C differs from identity by {residual:.1e}");

    let ahead = Vec3::new(5.0, 0.0, 1.5);
    let p = unwind_point(ahead, &robot);
    println!("a point 5 m ahead in the camera frame, unwound: ({:.3}, {:.3}, {:.3})", p.x, p.y, p.z);

    println!();
    println!("camera \\ robot  {}", RotationSet::ALL.map(|r| format!("{:>9}", r.to_string())).join(""));
    for camera in RotationSet::ALL {
        let row: String = RotationSet::ALL
            .iter()
            .map(|&robot| format!("{:>9}", if capability_check(camera, robot) { "yes" } else { "-" }))
            .collect();
        println!("{:>14}  {row}", camera.to_string());
    }

    // a planar robot turning through a full circle while the user looks ahead
    println!();
    println!("robot yaw   UR view   CR view  (degrees, head held at 0)");
    let head = PlanarRotation::from_angle(0.0).unwrap();
    for deg in (0..=360).step_by(60) {
        let robot = PlanarRotation::from_degrees(deg as f64).unwrap();
        let ur = viewpoint_heading(robot, head, ViewMode::Unwound);
        let cr = viewpoint_heading(robot, head, ViewMode::Coupled);
        println!("{deg:>9} {:>9.1} {:>9.1}", ur.degrees(), cr.degrees());
    }
}
