//! Plans across the walled fixture with Theta* and compares it with the
//! 8-connected grid path.
//!
//! ```text
//! cargo run --example plan_path
//! ```

use unwind_sim::planner::{line_of_sight, plan_grid_astar, plan_theta_star, PlanError};
use unwind_sim::{OccupancyGrid, Point2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/walled.grid.json");
    let grid = OccupancyGrid::from_json(&std::fs::read_to_string(path)?)?;
    let (start, goal) = (Point2::new(1.0, 1.0), Point2::new(9.0, 9.0));

    let any_angle = plan_theta_star(&grid, start, goal)?;
    let grid_path = plan_grid_astar(&grid, start, goal)?;
    println!("Theta*: {} vertices, {:.3} m", any_angle.vertices().len(), any_angle.length());
    for v in any_angle.vertices() {
        println!("    ({:.2}, {:.2})", v.x, v.y);
    }
    println!("8-connected A*: {} vertices, {:.3} m", grid_path.vertices().len(), grid_path.length());
    println!("straight line: {:.3} m", start.distance(goal));

    let clear = any_angle.vertices().windows(2).all(|w| line_of_sight(&grid, w[0], w[1]).unwrap_or(false));
    println!("every Theta* segment has line of sight: {clear}");

    // a goal sealed inside a box
    let mut sealed = grid.clone();
    sealed.fill_rect(Point2::new(8.0, 8.0), Point2::new(10.0, 8.5));
    sealed.fill_rect(Point2::new(8.0, 8.0), Point2::new(8.5, 10.0));
    match plan_theta_star(&sealed, start, Point2::new(9.25, 9.25)) {
        Err(PlanError::NoPath) => println!("sealed corner: no path"),
        other => println!("sealed corner: {other:?}"),
    }
    Ok(())
}
