//! Train every variant at one advising cost, save the bundles, reload one and
//! check it advises exactly as before.
//!
//!     cargo run --example train_advisor [-- OUT_DIR]

use std::path::PathBuf;

use selective_advisor::advisor::BundleManifest;
use selective_advisor::pipeline::{self, PipelineConfig, Trial};
use selective_advisor::trainer::empirical_ttl;
use selective_advisor::{Advisor, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let config = PipelineConfig::default();
    let prepared = pipeline::prepare(&config)?;
    let human = pipeline::build_profile(&config, &prepared)?;
    let trial = Trial::build(&config, &prepared, &human, 0)?;
    let alpha = 0.2;

    println!("{:<16} {:>6} {:>6} {:>10} {:>10}", "variant", "pos", "neg", "train TTL", "human");
    let mut saved = None;
    for v in Variant::ALL {
        let r = trial.train(&config, v, alpha)?;
        println!(
            "{:<16} {:>6} {:>6} {:>10.2} {:>10.2}",
            v.name(),
            r.advisor.rule_set.positive.len(),
            r.advisor.rule_set.negative.len(),
            empirical_ttl(&r.advisor, &prepared.dataset, &trial.panel)?,
            trial.panel.human_loss(&r.advisor.costs)
        );
        if v == Variant::Tr {
            let dir = out.join("tr_bundle");
            r.advisor.save_bundle(&dir, &BundleManifest::default())?;
            saved = Some((dir, r.advisor));
        }
    }

    let (dir, original) = saved.expect("TR trained");
    let (loaded, manifest) = Advisor::load_bundle(&dir)?;
    let same = prepared.test_rows.iter().all(|&r| {
        let x = &prepared.dataset.rows[r].values;
        original.advise(x, 1, 0.7).ok() == loaded.advise(x, 1, 0.7).ok()
    });
    println!("\nbundle at {} ({} files hashed); reloaded advisor identical: {same}", dir.display(), manifest.artifacts.len());
    Ok(())
}
