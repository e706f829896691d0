//! Binarize a dataset and mine candidate advising rules from a random forest.
//!
//!     cargo run --example mine_rules

use selective_advisor::data::synthetic::Domain;
use selective_advisor::pipeline::{self, PipelineConfig};
use selective_advisor::rules::{mine_candidates, Side};
use selective_advisor::trainer::TrainerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::for_domain(Domain::Heart);
    let prepared = pipeline::prepare(&config)?;
    println!("{} boolean conditions, e.g.", prepared.view.n_conditions());
    for c in prepared.view.catalog.iter().take(6) {
        println!("  {c}");
    }

    let mining = TrainerConfig::default().mining();
    let pool = mine_candidates(&prepared.view, &prepared.advisor_rows, &prepared.dataset.labels(), &mining)?;
    println!("\n{} positive and {} negative candidates", pool.positive.len(), pool.negative.len());
    for side in [Side::Positive, Side::Negative] {
        let mut best: Vec<_> = pool.side(side).iter().collect();
        best.sort_by(|a, b| b.precision.total_cmp(&a.precision).then(b.support.total_cmp(&a.support)));
        println!("\nmost precise rules advising {}:", side.label());
        for c in best.iter().take(5) {
            println!("  precision {:.3} support {:.3}  {}", c.precision, c.support, c.rule);
        }
    }
    Ok(())
}
