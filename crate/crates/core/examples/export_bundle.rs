//! Simulates a scenario and writes the bundle the browser viewer loads,
//! together with the per-step view samples it is checked against.
//!
//! ```text
//! cargo run --example export_bundle [-- out_dir]
//! ```

use std::path::PathBuf;

use unwind_sim::export::ViewerBundle;
use unwind_sim::simulator::{apply_head_trace, run_scenario, view_samples_json, HeadTrace, RunConfig};
use unwind_sim::{Scenario, ViewMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;

    let scenario = Scenario::from_json(&std::fs::read_to_string(data.join("campus-lite.scenario.json"))?)?;
    let log = run_scenario(&scenario, &RunConfig::default(), ViewMode::Unwound)?;
    let bundle = ViewerBundle::build(&log, &scenario)?;
    let bundle_path = out.join("campus-lite.bundle.json");
    std::fs::write(&bundle_path, bundle.to_json())?;
    println!(
        "{}: {} walls, {} pedestrians, {} samples at dt {}",
        bundle_path.display(),
        bundle.walls.len(),
        bundle.pedestrians.len(),
        bundle.robot.x.len(),
        bundle.dt
    );

    let ghost = HeadTrace::from_json(&std::fs::read_to_string(data.join("ghost.headtrace.json"))?)?;
    for mode in ViewMode::BOTH {
        let samples = apply_head_trace(&log, &ghost, mode)?;
        let path = out.join(format!("campus-lite.{}.viewsamples.json", mode.label().to_lowercase()));
        std::fs::write(&path, view_samples_json(&samples))?;
        println!("{}: {} samples", path.display(), samples.len());
    }
    Ok(())
}
