//! Missed disease costs three times a false alarm, and the cardiologist is
//! quicker to accept advice toward disease. Per-group effects of the selective
//! advisor versus always-on advice.
//!
//!     cargo run --release --example asymmetric_costs

use selective_advisor::pipeline::{self, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = PipelineConfig::heart_case_study();
    config.out = std::env::temp_dir().join("selective_advisor_case_study");
    let study = pipeline::cmd_case_study(&config)?;
    println!(
        "alpha {} lambda0 {} lambda1 {}\n",
        study.alpha, study.costs.lambda0, study.costs.lambda1
    );
    println!("{:<20} {:<10} {:>10} {:>10} {:>10}", "group", "variant", "value add", "advised", "accepted");
    for (variant, report) in &study.reports {
        let mut rows = vec![("all", &report.overall)];
        rows.extend(report.groups.iter().map(|g| (g.group.as_str(), &g.metrics)));
        for (name, m) in rows {
            println!(
                "{:<20} {:<10} {:>10.4} {:>10.3} {:>10}",
                name,
                variant.name(),
                m.value_added.mean,
                m.advising_rate.mean,
                m.acceptance_rate.map_or("-".into(), |s| format!("{:.3}", s.mean))
            );
        }
    }
    println!("\npaired differences in value added:");
    for p in &study.paired {
        let t = p.t.map_or("-".into(), |t| format!("{t:.2}"));
        println!(
            "  {:<20} {} - {}  {:>8.4}  t = {t}",
            p.group,
            p.variant.name(),
            p.baseline.name(),
            p.mean_difference
        );
    }
    println!("\ntables written under {}", config.out.display());
    Ok(())
}
