//! Regenerate the bundled synthetic tables under `data/` and report how hard
//! each one is for the standard difficulty-biased expert.
//!
//!     cargo run --example make_datasets [-- OUT_DIR]

use std::path::PathBuf;

use selective_advisor::data::synthetic::{self, Domain};
use selective_advisor::humansim::presets::{difficulty_threshold, LOW_ACCURACY};
use selective_advisor::pipeline::{prepare_from, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&out)?;
    for domain in Domain::ALL {
        let raw = synthetic::generate(domain, domain.bundled_seed());
        let path = out.join(domain.file_name());
        synthetic::write_csv(&raw, &path)?;

        let split = raw.split(domain.split_counts(), domain.split_seed())?;
        let config = PipelineConfig::for_domain(domain);
        let prepared = prepare_from(&config, split, Some(domain))?;
        let t = difficulty_threshold(domain);
        let hard = prepared.difficulty.iter().filter(|&&d| d > t).count() as f64 / raw.len() as f64;
        let positives = raw.labels().iter().filter(|&&y| y == 1).count() as f64 / raw.len() as f64;
        println!(
            "{:<6} rows={:<5} positive_rate={:.3} above_threshold={:.3} expected_accuracy={:.3} -> {}",
            domain.name(),
            raw.len(),
            positives,
            hard,
            1.0 - (1.0 - LOW_ACCURACY) * hard,
            path.display()
        );
    }
    Ok(())
}
