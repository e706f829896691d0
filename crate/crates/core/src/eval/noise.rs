use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::estimators::{auc, DiscretionModel, InteractionRecord};
use crate::humansim::{Direction, HumanProfile};
use crate::seeding;

/// One copy of `profile` per noise level: each acceptance probability is
/// shifted by a fixed uniform draw from `[-level, level]` and clamped.
pub fn degrade_adb(profile: &HumanProfile, levels: &[f64]) -> Result<Vec<HumanProfile>, EvalError> {
    levels
        .iter()
        .map(|&level| {
            if !(0.0..=1.0).contains(&level) {
                return Err(EvalError::InvalidSpec(format!("noise level {level} outside [0, 1]")));
            }
            let mut p = profile.clone();
            p.adb.noise_level = level;
            Ok(p)
        })
        .collect()
}

/// AUC of `model` at predicting acceptances drawn from `profile` on the
/// `(c_m, c_h, advice)` of each event. The recorded outcomes are ignored.
pub fn acceptance_auc(
    model: &DiscretionModel,
    profile: &HumanProfile,
    events: &[InteractionRecord],
    seed: u64,
) -> Result<Option<f64>, EvalError> {
    let mut rng = seeding::rng(seed);
    let mut scores = Vec::with_capacity(events.len());
    let mut labels = Vec::with_capacity(events.len());
    for e in events {
        let a = profile
            .adb
            .sample_acceptance(e.c_m, e.c_h, Direction::of(e.advice), &mut rng)?;
        scores.push(model.predict(e.c_m, e.c_h));
        labels.push(u8::from(a));
    }
    Ok(auc(&scores, &labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub level: f64,
    pub auc: Option<f64>,
}

/// Discretion-model AUC against the perturbed ground truth at each level.
pub fn degradation_study(
    model: &DiscretionModel,
    profile: &HumanProfile,
    levels: &[f64],
    events: &[InteractionRecord],
    seed: u64,
) -> Result<Vec<NoisePoint>, EvalError> {
    let profiles = degrade_adb(profile, levels)?;
    profiles
        .iter()
        .zip(levels)
        .map(|(p, &level)| {
            Ok(NoisePoint {
                level,
                auc: acceptance_auc(model, p, events, seed)?,
            })
        })
        .collect()
}
