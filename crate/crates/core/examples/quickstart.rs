//! Train a selective advisor for the simulated cardiologist and compare the
//! team against the expert working alone on the test split.
//!
//!     cargo run --example quickstart

use selective_advisor::pipeline::{self, PipelineConfig, Trial};
use selective_advisor::Variant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let prepared = pipeline::prepare(&config)?;
    let human = pipeline::build_profile(&config, &prepared)?;
    let trial = Trial::build(&config, &prepared, &human, 0)?;

    let alpha = 0.1;
    let trained = trial.train(&config, Variant::Tr, alpha)?;
    let rules = &trained.advisor.rule_set;
    println!(
        "{} rules advising 1 and {} advising 0 after {} iterations; the first few:",
        rules.positive.len(),
        rules.negative.len(),
        trained.iterations_run
    );
    for line in rules.to_string().lines().take(6) {
        println!("  {line}");
    }

    let (_, report) = trial.evaluate(&config, &trained.advisor, alpha, false)?;
    let m = &report.overall;
    println!("human alone   loss {:.4}", m.hdl.mean);
    println!("with advisor  loss {:.4} (decisions {:.4} + advising {:.4})", m.ttl.mean, m.tdl.mean, m.al.mean);
    println!("value added   {:.4} +- {:.4}", m.value_added.mean, m.value_added.se);
    println!("advised on    {:.1}% of cases", 100.0 * m.advising_rate.mean);

    // one instance end to end
    let row = prepared.test_rows[0];
    let values = &prepared.dataset.rows[row].values;
    let advice = trained.advisor.advise(values, 0, 0.55)?;
    println!("\nexpert says 0 at confidence 0.55 on test row {row}: {advice:?}");
    Ok(())
}
