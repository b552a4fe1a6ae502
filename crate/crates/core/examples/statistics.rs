//! Preference and comfort statistics: exact binomial tests with
//! Clopper–Pearson intervals, and the paired tests on a comfort CSV.
//!
//! ```text
//! cargo run --example statistics
//! ```

use unwind_sim::stats::{
    clopper_pearson_ci, exact_binomial_test, mann_whitney_u, paired_t_test, wilcoxon_signed_rank,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // how many of 34 participants preferred one condition
    for k in [24, 27, 28] {
        let r = exact_binomial_test(k, 34, 0.5)?;
        let (lo, hi) = clopper_pearson_ci(k, 34, 0.95)?;
        println!(
            "{k}/34: p = {:.4} (one-sided {:.5}), 95% CI ({lo:.3}, {hi:.3})",
            r.p_two_sided,
            r.p_one_sided.unwrap_or(f64::NAN)
        );
    }

    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/comfort-pairs.csv");
    let mut ur = Vec::new();
    let mut cr = Vec::new();
    for row in csv::Reader::from_path(path)?.records() {
        let row = row?;
        ur.push(row[0].parse::<f64>()?);
        cr.push(row[1].parse::<f64>()?);
    }

    let w = wilcoxon_signed_rank(&ur, &cr)?;
    println!(
        "Wilcoxon: W+ = {}, p = {:.5} ({:?}), r = {:.2}",
        w.statistic,
        w.p_two_sided,
        w.method,
        w.effect_size.unwrap_or(f64::NAN)
    );
    let t = paired_t_test(&cr, &ur)?;
    println!(
        "paired t: t({}) = {:.2}, p = {:.4}, mean difference CI ({:.2}, {:.2})",
        t.df.unwrap_or(f64::NAN),
        t.statistic,
        t.p_two_sided,
        t.ci_low.unwrap_or(f64::NAN),
        t.ci_high.unwrap_or(f64::NAN)
    );
    // treating the columns as independent groups instead
    let u = mann_whitney_u(&ur, &cr)?;
    println!("Mann-Whitney: U = {}, p = {:.4} ({:?})", u.statistic, u.p_two_sided, u.method);
    Ok(())
}
