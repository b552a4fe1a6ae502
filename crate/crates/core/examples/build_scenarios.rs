//! Regenerates the bundled scenarios and planner fixtures under `data/`.
//!
//! ```text
//! cargo run --example build_scenarios
//! ```

use std::path::Path;

use unwind_sim::simulator::{HeadSample, HeadTrace, RunConfig};
use unwind_sim::world::{OccupancyGrid, Pedestrian, Point2, Pose, Scenario};

const RES: f64 = 0.1;

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn rect(g: &mut OccupancyGrid, x0: f64, y0: f64, x1: f64, y1: f64) {
    g.fill_rect(p(x0, y0), p(x1, y1));
}

/// Walls of thickness `t` around a `w × h` metre map.
fn bounded(w: f64, h: f64, t: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::empty((w / RES).round() as usize, (h / RES).round() as usize, RES, p(0.0, 0.0))
        .expect("valid size");
    rect(&mut g, 0.0, 0.0, w, t);
    rect(&mut g, 0.0, h - t, w, h);
    rect(&mut g, 0.0, 0.0, t, h);
    rect(&mut g, w - t, 0.0, w, h);
    g
}

fn walker(id: &str, pts: &[(f64, f64)], speed: f64, start_time: f64) -> Pedestrian {
    Pedestrian {
        id: id.to_string(),
        waypoints: pts.iter().map(|&(x, y)| p(x, y)).collect(),
        speed,
        start_time,
        looping: true,
    }
}

/// A 24 m × 16 m block: a 3.5 m ring corridor around two buildings split by
/// a courtyard lane, with a kiosk in the north-east corner. The robot loops
/// counter-clockwise back to where it started.
fn campus_lite() -> Scenario {
    let mut g = bounded(24.0, 16.0, 0.5);
    // west and east buildings, courtyard lane between x = 10.5 and 13.5
    rect(&mut g, 4.0, 4.0, 10.5, 12.0);
    rect(&mut g, 13.5, 4.0, 20.0, 12.0);
    // planters in the courtyard keep walkers away from the ring
    rect(&mut g, 10.5, 4.0, 13.5, 5.0);
    // kiosk tucked into the outer corner
    rect(&mut g, 22.5, 14.5, 23.5, 15.5);

    let route = vec![p(21.75, 2.25), p(21.75, 13.75), p(2.25, 13.75), p(2.25, 2.25), p(7.0, 2.25)];
    let mut s = Scenario::new("campus-lite", g, Pose { x: 7.0, y: 2.25, theta: 0.0 }, route);
    s.pedestrians = vec![
        walker("courtyard-a", &[(11.5, 6.0), (11.5, 10.5), (11.5, 6.0)], 0.8, 0.0),
        walker("courtyard-b", &[(12.6, 10.5), (12.6, 6.5), (12.6, 10.5)], 0.6, 4.0),
    ];
    s
}

/// 14 m square room with a central pillar and a 10 m square route.
fn square_loop() -> Scenario {
    let mut g = bounded(14.0, 14.0, 0.5);
    rect(&mut g, 5.0, 5.0, 9.0, 9.0);
    let route = vec![p(12.0, 2.0), p(12.0, 12.0), p(2.0, 12.0), p(2.0, 2.0), p(4.0, 2.0)];
    Scenario::new("square-loop", g, Pose { x: 4.0, y: 2.0, theta: 0.0 }, route)
}

fn fixture_grid(rows: usize, cols: usize, res: f64) -> OccupancyGrid {
    OccupancyGrid::empty(cols, rows, res, p(0.0, 0.0)).expect("valid size")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;
    let write = |name: &str, text: String| std::fs::write(dir.join(name), text);

    write("campus-lite.scenario.json", campus_lite().to_json())?;
    write("square-loop.scenario.json", square_loop().to_json())?;
    write("default.runconfig.json", RunConfig::default().to_json())?;

    // planner fixtures, 10 m × 10 m at 0.5 m
    write("empty.grid.json", fixture_grid(20, 20, 0.5).to_json())?;
    let mut walled = fixture_grid(20, 20, 0.5);
    rect(&mut walled, 4.0, 0.0, 5.0, 7.0);
    rect(&mut walled, 6.5, 3.0, 7.5, 10.0);
    write("walled.grid.json", walled.to_json())?;
    let mut enclosed = fixture_grid(20, 20, 0.5);
    rect(&mut enclosed, 6.0, 6.0, 9.5, 6.5);
    rect(&mut enclosed, 6.0, 9.0, 9.5, 9.5);
    rect(&mut enclosed, 6.0, 6.0, 6.5, 9.5);
    rect(&mut enclosed, 9.0, 6.0, 9.5, 9.5);
    write("enclosed.grid.json", enclosed.to_json())?;

    // a scripted "ghost" head: slow look-around sweeps sampled at 10 Hz
    let ghost: Vec<HeadSample> = (0..=750)
        .map(|k| {
            let t = k as f64 / 10.0;
            let yaw = 0.9 * (t / 7.0).sin() + 0.35 * (t / 2.3).sin();
            HeadSample { t, yaw: (yaw * 1e6).round() / 1e6 }
        })
        .collect();
    write("ghost.headtrace.json", HeadTrace::headtrace_json(&ghost))?;

    println!("wrote scenarios and fixtures to {}", dir.display());
    Ok(())
}
