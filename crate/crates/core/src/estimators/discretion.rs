use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{auc, EstimatorError, Gbdt, GbdtParams};
use crate::data::Dataset;
use crate::humansim::{Case, Direction, HumanProfile};
use crate::seeding;

/// One contradiction between the human and the bootstrap advisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub instance_id: usize,
    pub h: u8,
    pub c_h: f64,
    pub advice: u8,
    pub c_m: f64,
    pub accepted: u8,
}

/// Simulate the human on `rows` next to a bootstrap advisor whose `p(y = 1)`
/// for each dataset row is `bootstrap_p[row]`. Advice is the more likely class
/// with confidence `max(p, 1 - p)`; only contradictions are recorded.
pub fn collect_interactions<R: Rng + ?Sized>(
    profile: &HumanProfile,
    bootstrap_p: &[f64],
    dataset: &Dataset,
    rows: &[usize],
    difficulty: &[f64],
    rng: &mut R,
) -> Result<Vec<InteractionRecord>, EstimatorError> {
    let mut out = Vec::new();
    for &r in rows {
        let case = Case::from_dataset(dataset, r, difficulty[r]);
        let draw = profile.simulate(&case, rng)?;
        let p = bootstrap_p[r];
        let advice = u8::from(p > 0.5);
        if advice == draw.h {
            continue;
        }
        let c_m = p.max(1.0 - p);
        let accepted = profile
            .adb
            .sample_acceptance(c_m, draw.c_h, Direction::of(advice), rng)?;
        out.push(InteractionRecord {
            instance_id: case.id,
            h: draw.h,
            c_h: draw.c_h,
            advice,
            c_m,
            accepted: u8::from(accepted),
        });
    }
    Ok(out)
}

pub fn write_interactions(records: &[InteractionRecord], path: &Path) -> Result<(), EstimatorError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_interactions(path: &Path) -> Result<Vec<InteractionRecord>, EstimatorError> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretionParams {
    pub trees: GbdtParams,
    /// Fraction of records held out to measure AUC.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for DiscretionParams {
    fn default() -> Self {
        Self {
            trees: GbdtParams::default(),
            holdout_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Estimated probability that the human accepts contradicting advice, as a
/// function of the advisor's and the human's confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretionModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<Gbdt>,
    /// When set, every query returns this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_auc: Option<f64>,
    #[serde(default)]
    pub n_records: usize,
}

impl DiscretionModel {
    pub fn fixed(value: f64) -> DiscretionModel {
        DiscretionModel {
            classifier: None,
            fixed_value: Some(value.clamp(0.0, 1.0)),
            holdout_auc: None,
            n_records: 0,
        }
    }

    /// A copy that ignores its classifier and always answers `value`.
    pub fn with_fixed_value(&self, value: f64) -> DiscretionModel {
        DiscretionModel {
            fixed_value: Some(value.clamp(0.0, 1.0)),
            ..self.clone()
        }
    }

    pub fn predict(&self, c_m: f64, c_h: f64) -> f64 {
        if let Some(v) = self.fixed_value {
            return v;
        }
        match &self.classifier {
            Some(m) => m.predict_proba(&[c_m, c_h]),
            None => 0.5,
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<(), EstimatorError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<DiscretionModel, EstimatorError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Fit boosted trees on `(c_m, c_h) -> accepted`, reporting AUC on a seeded holdout.
pub fn fit_discretion(records: &[InteractionRecord], params: &DiscretionParams) -> Result<DiscretionModel, EstimatorError> {
    if records.len() < 2 {
        return Err(EstimatorError::InsufficientRecords(records.len()));
    }
    let accepts = records.iter().filter(|r| r.accepted == 1).count();
    if accepts == 0 || accepts == records.len() {
        return Err(EstimatorError::SingleClassRecords);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut seeding::rng(seeding::derive_str(params.seed, "holdout")));
    let n_hold = (params.holdout_fraction * records.len() as f64).round() as usize;
    let (hold, fit) = order.split_at(n_hold.min(records.len()));
    let has_both = |idx: &[usize]| {
        let a = idx.iter().filter(|&&i| records[i].accepted == 1).count();
        a > 0 && a < idx.len()
    };
    let (fit, hold): (Vec<usize>, Vec<usize>) = if has_both(fit) {
        (fit.to_vec(), hold.to_vec())
    } else {
        (order.clone(), Vec::new())
    };
    let features = |i: usize| vec![records[i].c_m, records[i].c_h];
    let x: Vec<Vec<f64>> = fit.iter().map(|&i| features(i)).collect();
    let y: Vec<u8> = fit.iter().map(|&i| records[i].accepted).collect();
    let trees = GbdtParams {
        seed: seeding::derive_str(params.seed, "trees"),
        ..params.trees.clone()
    };
    let model = Gbdt::fit(&x, &y, &trees)?;
    let holdout_auc = if hold.is_empty() {
        None
    } else {
        let s: Vec<f64> = hold.iter().map(|&i| model.predict_proba(&features(i))).collect();
        let l: Vec<u8> = hold.iter().map(|&i| records[i].accepted).collect();
        auc(&s, &l)
    };
    Ok(DiscretionModel {
        classifier: Some(model),
        fixed_value: None,
        holdout_auc,
        n_records: records.len(),
    })
}
