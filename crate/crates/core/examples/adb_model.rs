//! How likely the simulated expert is to take contradicting advice, as a
//! function of the advisor's and their own confidence, and how well a model
//! learned from logged interactions recovers it.
//!
//!     cargo run --example adb_model

use selective_advisor::estimators::{auc, fit_discretion, DiscretionParams};
use selective_advisor::humansim::{AdbParams, Direction};
use selective_advisor::pipeline::{self, interaction_log, PipelineConfig};
use selective_advisor::seeding;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let adb = AdbParams::default();
    let grid = [0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
    println!("acceptance probability (rows: advisor confidence, columns: expert confidence)");
    print!("{:>6}", "");
    for ch in grid {
        print!("{ch:>7}");
    }
    println!();
    for cm in grid {
        print!("{cm:>6}");
        for ch in grid {
            print!("{:>7.3}", adb.acceptance_probability(cm, ch, Direction::TowardPositive)?);
        }
        println!();
    }

    let config = PipelineConfig::default();
    let prepared = pipeline::prepare(&config)?;
    let human = pipeline::build_profile(&config, &prepared)?;
    let log = interaction_log(&prepared, &human, &prepared.interaction_rows, 1)?;
    let model = fit_discretion(&log, &DiscretionParams::default())?;
    println!(
        "\ndiscretion model: {} logged contradictions, holdout AUC {:.3}",
        log.len(),
        model.holdout_auc.unwrap_or(f64::NAN)
    );

    // score fresh contradictions against acceptances drawn from the true behavior
    let fresh = interaction_log(&prepared, &human, &prepared.advisor_rows, 2)?;
    let mut rng = seeding::rng(9);
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for e in &fresh {
        scores.push(model.predict(e.c_m, e.c_h));
        labels.push(u8::from(human.adb.sample_acceptance(e.c_m, e.c_h, Direction::of(e.advice), &mut rng)?));
    }
    println!("AUC on {} fresh contradictions: {:.3}", fresh.len(), auc(&scores, &labels).unwrap_or(f64::NAN));
    Ok(())
}
