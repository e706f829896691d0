//! The four standard simulated experts on each bundled dataset: how accurate
//! they are and how their stated confidence tracks their accuracy.
//!
//!     cargo run --example simulate_human

use selective_advisor::data::synthetic::Domain;
use selective_advisor::humansim::presets::{self, ConfidenceKind, DecisionKind};
use selective_advisor::humansim::Panel;
use selective_advisor::pipeline::{self, PipelineConfig};
use selective_advisor::seeding;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<6} {:<18} {:<18} {:>8} {:>10} {:>10}", "data", "decisions", "confidence", "acc", "conf|ok", "conf|err");
    for domain in Domain::ALL {
        let config = PipelineConfig::for_domain(domain);
        let prepared = pipeline::prepare(&config)?;
        let d = &prepared.dataset;
        let rows: Vec<usize> = (0..d.len()).collect();
        for decision in [DecisionKind::DifficultyBiased, DecisionKind::GroupBiased] {
            for confidence in [ConfidenceKind::AccuracyBiased, ConfidenceKind::GroupBiased] {
                let profile = presets::profile(domain, decision, confidence, d, 7)?;
                let mut rng = seeding::rng(seeding::derive_str(3, domain.name()));
                let panel = Panel::simulate(&profile, d, &rows, &prepared.difficulty, &mut rng)?;
                let (mut ok, mut c_ok, mut c_err) = (0usize, 0.0, 0.0);
                for (draw, &r) in panel.draws.iter().zip(&panel.rows) {
                    if draw.h == d.rows[r].label {
                        ok += 1;
                        c_ok += draw.c_h;
                    } else {
                        c_err += draw.c_h;
                    }
                }
                let n = panel.len();
                println!(
                    "{:<6} {:<18} {:<18} {:>8.3} {:>10.3} {:>10.3}",
                    domain.name(),
                    format!("{decision:?}"),
                    format!("{confidence:?}"),
                    ok as f64 / n as f64,
                    c_ok / ok.max(1) as f64,
                    c_err / (n - ok).max(1) as f64
                );
            }
        }
    }
    Ok(())
}
