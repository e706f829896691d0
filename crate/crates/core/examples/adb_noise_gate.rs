//! Deploy an advisor to experts whose acceptance behavior drifts further and
//! further from what the discretion model learned, with and without the
//! validation gate.
//!
//!     cargo run --release --example adb_noise_gate

use selective_advisor::pipeline::{self, PipelineConfig};
use selective_advisor::Variant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = PipelineConfig::default();
    config.out = std::env::temp_dir().join("selective_advisor_noise");
    config.variants = vec![Variant::Tr];
    config.alphas = vec![0.3];
    config.eval.training_repetitions = 3;
    config.eval.repetitions = 20;
    let rows = pipeline::cmd_degrade_adb(&config)?;

    println!("{:>6} {:>4} {:>7} {:>12} {:>12} {:>9}", "noise", "rep", "AUC", "ungated VA", "gated VA", "deployed");
    for r in &rows {
        println!(
            "{:>6} {:>4} {:>7} {:>12.4} {:>12.4} {:>9}",
            r.level,
            r.repetition,
            r.auc.map_or("-".into(), |a| format!("{a:.3}")),
            r.value_added,
            r.gated_value_added,
            r.deployed
        );
    }
    Ok(())
}
