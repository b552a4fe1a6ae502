//! Runs a bundled scenario in both view modes and audits the result.
//!
//! ```text
//! cargo run --example simulate_and_audit [-- path/to/scenario.json]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use unwind_sim::analysis::audit_run;
use unwind_sim::simulator::{run_scenario, RunConfig};
use unwind_sim::{Scenario, ViewMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/campus-lite.scenario.json")
    });
    let scenario = Scenario::from_json(&std::fs::read_to_string(&path)?)?;
    let config = RunConfig::default();

    for mode in ViewMode::BOTH {
        let started = Instant::now();
        let log = run_scenario(&scenario, &config, mode)?;
        let elapsed = started.elapsed();
        let f = &log.footer;
        println!(
            "{mode}: {:?} after {} steps ({:.2} s wall clock)",
            f.termination.kind,
            log.steps.len(),
            elapsed.as_secs_f64()
        );
        println!(
            "    path {:.2} m, duration {:.2} s, total rotation {:.1} deg",
            f.path_length, f.duration, f.total_rotation
        );

        let audit = audit_run(&log, &scenario);
        println!(
            "    min wall clearance {:.3} m, min person distance {:?} m, max |omega| {:.3} rad/s, max angular accel {:.3} rad/s^2",
            audit.min_wall_clearance.unwrap_or(f64::NAN),
            audit.min_person_distance,
            audit.max_abs_omega.unwrap_or(0.0),
            audit.max_angular_acceleration.unwrap_or(0.0),
        );
        for v in &audit.violations {
            println!("    violation: {:?} at step {} ({} > limit {})", v.kind, v.step, v.value, v.limit);
        }
    }
    Ok(())
}
