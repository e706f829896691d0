//! Ready-made expert profiles for the bundled domains.

use serde::{Deserialize, Serialize};

use super::{AdbParams, ConfidenceBehavior, DecisionBehavior, Group, GroupValue, HumanProfile, SimError};
use crate::data::synthetic::Domain;
use crate::data::{Condition, Dataset, FeatureKind, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    DifficultyBiased,
    GroupBiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceKind {
    AccuracyBiased,
    GroupBiased,
}

pub const LOW_ACCURACY: f64 = 0.6;
pub const GROUP_HIGH_ACCURACY: f64 = 0.95;
pub const DEFAULT_KAPPA: f64 = 0.05;

/// Difficulty threshold on the `2|p - 0.5|` scale.
pub fn difficulty_threshold(domain: Domain) -> f64 {
    match domain {
        Domain::Heart => 0.6,
        Domain::Fico => 0.3,
        Domain::Hr => 0.8,
    }
}

fn condition(dataset: &Dataset, feature: &str, op: Op, value: &str) -> Result<Condition, SimError> {
    let index = dataset
        .feature_index(feature)
        .ok_or_else(|| SimError::SchemaMismatch(feature.to_string()))?;
    Ok(match dataset.schema[index].kind {
        FeatureKind::Numeric => {
            let t = value
                .parse()
                .map_err(|_| SimError::InvalidProfile(format!("`{value}` is not a number")))?;
            Condition::numeric(feature, index, op, t)
        }
        FeatureKind::Categorical => Condition::categorical(feature, index, op, value),
    })
}

/// Group whose decisions are less accurate under the group-biased profile.
pub fn decision_group(domain: Domain, dataset: &Dataset) -> Result<Group, SimError> {
    let c = match domain {
        Domain::Heart => condition(dataset, "age", Op::Lt, "50")?,
        Domain::Fico => condition(dataset, "NumSatisfactoryTrades", Op::Lt, "24")?,
        Domain::Hr => condition(dataset, "Age", Op::Gt, "32")?,
    };
    Ok(Group::new(vec![c]))
}

/// Group that reports low confidence on hard instances under the group-biased profile.
pub fn confidence_group(domain: Domain, dataset: &Dataset) -> Result<Group, SimError> {
    let c = match domain {
        Domain::Heart => condition(dataset, "sex", Op::Eq, "male")?,
        Domain::Fico => condition(dataset, "ExternalRiskEstimate", Op::Lt, "65")?,
        Domain::Hr => condition(dataset, "Gender", Op::Eq, "Male")?,
    };
    Ok(Group::new(vec![c]))
}

/// One of the four standard expert profiles for `domain`.
pub fn profile(
    domain: Domain,
    decision: DecisionKind,
    confidence: ConfidenceKind,
    dataset: &Dataset,
    seed: u64,
) -> Result<HumanProfile, SimError> {
    let threshold = difficulty_threshold(domain);
    let decision = match decision {
        DecisionKind::DifficultyBiased => DecisionBehavior::DifficultyBiased {
            threshold,
            low_accuracy: LOW_ACCURACY,
            high_accuracy: 1.0,
        },
        DecisionKind::GroupBiased => DecisionBehavior::GroupBiased {
            group: decision_group(domain, dataset)?,
            low_accuracy: LOW_ACCURACY,
            high_accuracy: GROUP_HIGH_ACCURACY,
        },
    };
    let confidence = match confidence {
        ConfidenceKind::AccuracyBiased => ConfidenceBehavior::AccuracyBiased { kappa: DEFAULT_KAPPA },
        ConfidenceKind::GroupBiased => ConfidenceBehavior::GroupBiased {
            threshold,
            easy_confidence: 0.9,
            group: confidence_group(domain, dataset)?,
            low_confidence: 0.2,
            high_confidence: 1.0,
        },
    };
    Ok(HumanProfile {
        decision,
        confidence,
        adb: AdbParams {
            noise_seed: seed,
            ..AdbParams::default()
        },
        seed,
    })
}

/// Cardiology expert who errs on younger patients with disease, weighs false
/// negatives three times as heavily, and is more willing to accept advice toward a
/// positive diagnosis than away from it.
pub fn asymmetric_heart(dataset: &Dataset, seed: u64) -> Result<HumanProfile, SimError> {
    let young = condition(dataset, "age", Op::Lt, "50")?;
    let decision = DecisionBehavior::CustomGroup {
        groups: vec![
            GroupValue {
                group: Group::new(vec![young]).with_label(1).named("age < 50, diseased"),
                value: LOW_ACCURACY,
            },
            GroupValue {
                group: Group::new(vec![]).named("everyone else"),
                value: GROUP_HIGH_ACCURACY,
            },
        ],
    };
    Ok(HumanProfile {
        decision,
        confidence: ConfidenceBehavior::AccuracyBiased { kappa: DEFAULT_KAPPA },
        adb: AdbParams {
            accept_boost: 1.5,
            accept_damp: 0.5,
            noise_seed: seed,
            ..AdbParams::default()
        },
        seed,
    })
}
