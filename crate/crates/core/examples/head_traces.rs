//! Replays a recorded run under several head traces and compares how far
//! the user's head has to turn in each viewing mode.
//!
//! ```text
//! cargo run --example head_traces
//! ```

use std::path::PathBuf;

use unwind_sim::analysis::mean_head_deviation;
use unwind_sim::simulator::{apply_head_trace, run_scenario, HeadTrace, RunConfig};
use unwind_sim::{Scenario, ViewMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let scenario = Scenario::from_json(&std::fs::read_to_string(data.join("square-loop.scenario.json"))?)?;
    let log = run_scenario(&scenario, &RunConfig::default(), ViewMode::Unwound)?;
    let ghost = HeadTrace::from_json(&std::fs::read_to_string(data.join("ghost.headtrace.json"))?)?;

    let traces = [
        ("still", HeadTrace::Still { yaw: 0.0 }),
        ("follow:0.7", HeadTrace::FollowHeading { lag_tau: 0.7 }),
        ("sin:0.5,8", HeadTrace::Sinusoid { amplitude: 0.5, period: 8.0 }),
        ("ghost", ghost),
    ];
    println!("{:<12} {:>10} {:>10}   mean |robot yaw - view yaw|, degrees", "head", "UR", "CR");
    for (name, head) in &traces {
        let mut dev = [0.0; 2];
        for (slot, mode) in dev.iter_mut().zip(ViewMode::BOTH) {
            let samples = apply_head_trace(&log, head, mode)?;
            let robot: Vec<f64> = samples.iter().map(|s| s.robot_yaw).collect();
            let view: Vec<f64> = samples.iter().map(|s| s.world_view_yaw).collect();
            *slot = mean_head_deviation(&robot, &view)?;
        }
        println!("{name:<12} {:>10.2} {:>10.2}", dev[0], dev[1]);
    }

    // first few view samples under the scripted head
    let samples = apply_head_trace(&log, &traces[3].1, ViewMode::Unwound)?;
    for s in samples.iter().step_by(100).take(5) {
        println!("t={:>5.1}  robot {:>7.3}  head {:>7.3}  view {:>7.3}", s.t, s.robot_yaw, s.head_yaw, s.world_view_yaw);
    }
    Ok(())
}
