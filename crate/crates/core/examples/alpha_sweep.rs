//! Value added and advising rate of each variant as advice gets more costly,
//! averaged over a few independent trainings.
//!
//!     cargo run --release --example alpha_sweep

use selective_advisor::pipeline::{self, build_trials, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = PipelineConfig::default();
    config.eval.training_repetitions = 3;
    config.eval.repetitions = 20;
    let prepared = pipeline::prepare(&config)?;
    let human = pipeline::build_profile(&config, &prepared)?;
    let trials = build_trials(&config, &prepared, &human)?;
    let result = pipeline::sweep(&config, &trials, |_, _, _, _| Ok(()))?;

    println!("{:<6} {:<16} {:>12} {:>8} {:>10}", "alpha", "variant", "value added", "se", "advising");
    for p in result.curve() {
        println!(
            "{:<6} {:<16} {:>12.4} {:>8.4} {:>10.3}",
            p.alpha,
            p.variant.name(),
            p.value_added,
            p.se,
            p.advising_rate
        );
    }
    Ok(())
}
