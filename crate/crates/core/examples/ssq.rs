//! Scores simulator sickness questionnaires from CSV.
//!
//! ```text
//! cargo run --example ssq [-- responses.csv]
//! ```

use std::path::PathBuf;

use unwind_sim::analysis::{read_ssq_csv, ssq_score, SsqResponse, SSQ_ITEMS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/ssq-sample.csv"));
    let responses = read_ssq_csv(std::fs::File::open(&path)?)?;

    println!("{:>3} {:>9} {:>11} {:>15} {:>8}", "#", "nausea", "oculomotor", "disorientation", "total");
    for (k, r) in responses.iter().enumerate() {
        let s = ssq_score(r);
        println!("{k:>3} {:>9.2} {:>11.2} {:>15.2} {:>8.2}", s.nausea, s.oculomotor, s.disorientation, s.total);
    }
    let max = ssq_score(&SsqResponse::new(&[3; SSQ_ITEMS])?);
    println!("highest possible total: {:.2}", max.total);
    Ok(())
}
