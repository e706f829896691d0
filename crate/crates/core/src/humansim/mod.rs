//! Simulated experts: independent decisions, self-reported confidence, and
//! acceptance of contradicting advice.

pub mod adb;
pub mod presets;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adb::{AdbParams, Direction, FusionForm};
use crate::data::{Condition, Dataset, Value};
use crate::seeding;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("no custom group matches instance {0}")]
    NoMatchingRule(usize),
    #[error("group condition `{0}` does not match the instance schema")]
    SchemaMismatch(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A subpopulation: a conjunction of feature conditions, optionally restricted to one true label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    #[serde(default)]
    pub name: Option<String>,
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub label: Option<u8>,
}

impl Group {
    pub fn new(conditions: Vec<Condition>) -> Self {
        Self {
            name: None,
            conditions,
            label: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_label(mut self, label: u8) -> Self {
        self.label = Some(label);
        self
    }

    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let mut parts: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        if let Some(y) = self.label {
            parts.push(format!("y == {y}"));
        }
        if parts.is_empty() {
            "all".into()
        } else {
            parts.join(" AND ")
        }
    }

    /// Resolve every condition's column against `dataset`.
    pub fn resolve(&mut self, dataset: &Dataset) -> Result<(), SimError> {
        for c in &mut self.conditions {
            c.resolve(dataset)
                .map_err(|_| SimError::SchemaMismatch(c.feature.clone()))?;
        }
        Ok(())
    }

    pub fn matches(&self, values: &[Value], label: u8) -> Result<bool, SimError> {
        if self.label.is_some_and(|l| l != label) {
            return Ok(false);
        }
        for c in &self.conditions {
            match c.eval_row(values) {
                Some(true) => {}
                Some(false) => return Ok(false),
                None => return Err(SimError::SchemaMismatch(c.to_string())),
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupValue {
    pub group: Group,
    pub value: f64,
}

/// How likely the human is to decide correctly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionBehavior {
    /// Less accurate on instances a logistic model finds easy (difficulty above the threshold).
    DifficultyBiased {
        threshold: f64,
        low_accuracy: f64,
        high_accuracy: f64,
    },
    /// Less accurate inside one group.
    GroupBiased {
        group: Group,
        low_accuracy: f64,
        high_accuracy: f64,
    },
    /// First matching group wins.
    CustomGroup { groups: Vec<GroupValue> },
}

/// How confident the human reports being in their own decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceBehavior {
    /// Probability of being correct shifted by `+kappa` or `-kappa` (sign fixed per instance).
    AccuracyBiased { kappa: f64 },
    /// Fixed confidence below the difficulty threshold, group-dependent above it.
    GroupBiased {
        threshold: f64,
        easy_confidence: f64,
        group: Group,
        low_confidence: f64,
        high_confidence: f64,
    },
    CustomGroup { groups: Vec<GroupValue> },
}

pub const CONFIDENCE_FLOOR: f64 = 0.01;
pub const CONFIDENCE_CEILING: f64 = 0.99;

/// A complete simulated expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanProfile {
    pub decision: DecisionBehavior,
    pub confidence: ConfidenceBehavior,
    #[serde(default)]
    pub adb: AdbParams,
    #[serde(default)]
    pub seed: u64,
}

/// What the simulator needs to know about one instance.
#[derive(Debug, Clone, Copy)]
pub struct Case<'a> {
    pub id: usize,
    pub values: &'a [Value],
    pub label: u8,
    /// Logistic difficulty proxy in [0, 1]; larger is easier for a model.
    pub difficulty: f64,
}

impl<'a> Case<'a> {
    pub fn from_dataset(dataset: &'a Dataset, row: usize, difficulty: f64) -> Self {
        let r = &dataset.rows[row];
        Case {
            id: r.id,
            values: &r.values,
            label: r.label,
            difficulty,
        }
    }
}

/// One simulated independent judgment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanDraw {
    pub h: u8,
    pub c_h: f64,
    pub p_correct: f64,
}

/// `2|p - 0.5|`: zero when a model is undecided, one when it is certain.
pub fn difficulty_proxy(p: f64) -> f64 {
    2.0 * (p - 0.5).abs()
}

/// Draw `y` with probability `p_correct`, otherwise `1 - y`.
pub fn sample_decision<R: Rng + ?Sized>(p_correct: f64, y: u8, rng: &mut R) -> u8 {
    if rng.random::<f64>() < p_correct {
        y
    } else {
        1 - y
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SimError::InvalidProfile(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl HumanProfile {
    /// Resolve the columns of every group condition against `dataset`.
    pub fn resolve(&mut self, dataset: &Dataset) -> Result<(), SimError> {
        match &mut self.decision {
            DecisionBehavior::DifficultyBiased { .. } => {}
            DecisionBehavior::GroupBiased { group, .. } => group.resolve(dataset)?,
            DecisionBehavior::CustomGroup { groups } => {
                for g in groups {
                    g.group.resolve(dataset)?;
                }
            }
        }
        match &mut self.confidence {
            ConfidenceBehavior::AccuracyBiased { .. } => {}
            ConfidenceBehavior::GroupBiased { group, .. } => group.resolve(dataset)?,
            ConfidenceBehavior::CustomGroup { groups } => {
                for g in groups {
                    g.group.resolve(dataset)?;
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match &self.decision {
            DecisionBehavior::DifficultyBiased {
                threshold,
                low_accuracy,
                high_accuracy,
            } => {
                check_unit("threshold", *threshold)?;
                check_unit("low_accuracy", *low_accuracy)?;
                check_unit("high_accuracy", *high_accuracy)?;
            }
            DecisionBehavior::GroupBiased {
                low_accuracy,
                high_accuracy,
                ..
            } => {
                check_unit("low_accuracy", *low_accuracy)?;
                check_unit("high_accuracy", *high_accuracy)?;
            }
            DecisionBehavior::CustomGroup { groups } => {
                for g in groups {
                    check_unit("accuracy", g.value)?;
                }
            }
        }
        match &self.confidence {
            ConfidenceBehavior::AccuracyBiased { kappa } => {
                if !kappa.is_finite() {
                    return Err(SimError::InvalidProfile("kappa must be finite".into()));
                }
            }
            ConfidenceBehavior::GroupBiased {
                threshold,
                easy_confidence,
                low_confidence,
                high_confidence,
                ..
            } => {
                check_unit("threshold", *threshold)?;
                check_unit("easy_confidence", *easy_confidence)?;
                check_unit("low_confidence", *low_confidence)?;
                check_unit("high_confidence", *high_confidence)?;
            }
            ConfidenceBehavior::CustomGroup { groups } => {
                for g in groups {
                    check_unit("confidence", g.value)?;
                }
            }
        }
        self.adb.validate()
    }

    /// Probability that the human's independent decision is correct.
    pub fn correct_probability(&self, case: &Case) -> Result<f64, SimError> {
        match &self.decision {
            DecisionBehavior::DifficultyBiased {
                threshold,
                low_accuracy,
                high_accuracy,
            } => Ok(if case.difficulty > *threshold {
                *low_accuracy
            } else {
                *high_accuracy
            }),
            DecisionBehavior::GroupBiased {
                group,
                low_accuracy,
                high_accuracy,
            } => Ok(if group.matches(case.values, case.label)? {
                *low_accuracy
            } else {
                *high_accuracy
            }),
            DecisionBehavior::CustomGroup { groups } => first_match(groups, case),
        }
    }

    /// Self-reported confidence. Deterministic per instance: the sign of the
    /// accuracy-biased offset is a fixed function of the profile seed and instance id.
    pub fn confidence(&self, case: &Case, p_correct: f64) -> Result<f64, SimError> {
        match &self.confidence {
            ConfidenceBehavior::AccuracyBiased { kappa } => {
                let up = seeding::unit_hash(self.seed, case.id as u64, 0x6b61_7070_61) < 0.5;
                let c = if up { p_correct + kappa } else { p_correct - kappa };
                Ok(c.clamp(CONFIDENCE_FLOOR, CONFIDENCE_CEILING))
            }
            ConfidenceBehavior::GroupBiased {
                threshold,
                easy_confidence,
                group,
                low_confidence,
                high_confidence,
            } => {
                if case.difficulty < *threshold {
                    Ok(*easy_confidence)
                } else if group.matches(case.values, case.label)? {
                    Ok(*low_confidence)
                } else {
                    Ok(*high_confidence)
                }
            }
            ConfidenceBehavior::CustomGroup { groups } => first_match(groups, case),
        }
    }

    /// Draw one independent decision with its confidence.
    pub fn simulate<R: Rng + ?Sized>(&self, case: &Case, rng: &mut R) -> Result<HumanDraw, SimError> {
        let p_correct = self.correct_probability(case)?;
        let c_h = self.confidence(case, p_correct)?;
        let h = sample_decision(p_correct, case.label, rng);
        Ok(HumanDraw { h, c_h, p_correct })
    }

    pub fn save_json(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<HumanProfile, SimError> {
        let p: HumanProfile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }
}

fn first_match(groups: &[GroupValue], case: &Case) -> Result<f64, SimError> {
    for g in groups {
        if g.group.matches(case.values, case.label)? {
            return Ok(g.value);
        }
    }
    Err(SimError::NoMatchingRule(case.id))
}

/// Independent decisions for a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub rows: Vec<usize>,
    pub draws: Vec<HumanDraw>,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Simulate the profile on `rows`; `difficulty` is indexed by dataset row.
    pub fn simulate<R: Rng + ?Sized>(
        profile: &HumanProfile,
        dataset: &Dataset,
        rows: &[usize],
        difficulty: &[f64],
        rng: &mut R,
    ) -> Result<Panel, SimError> {
        let draws = rows
            .iter()
            .map(|&r| profile.simulate(&Case::from_dataset(dataset, r, difficulty[r]), rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Panel {
            rows: rows.to_vec(),
            draws,
        })
    }

    /// CSV with columns `instance_id,h,c_h,p_correct`.
    pub fn write_csv(&self, dataset: &Dataset, path: &Path) -> Result<(), SimError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["instance_id", "h", "c_h", "p_correct"])?;
        for (&r, d) in self.rows.iter().zip(&self.draws) {
            w.write_record([
                dataset.rows[r].id.to_string(),
                d.h.to_string(),
                d.c_h.to_string(),
                d.p_correct.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Op;

    fn heart_like(decision: DecisionBehavior, confidence: ConfidenceBehavior) -> HumanProfile {
        HumanProfile {
            decision,
            confidence,
            adb: AdbParams::default(),
            seed: 1,
        }
    }

    fn case(values: &[Value], difficulty: f64) -> Case<'_> {
        Case {
            id: 3,
            values,
            label: 1,
            difficulty,
        }
    }

    fn age_group() -> Group {
        Group::new(vec![Condition::numeric("age", 0, Op::Lt, 50.0)])
    }

    fn male_group() -> Group {
        Group::new(vec![Condition::categorical("sex", 1, Op::Eq, "male")])
    }

    #[test]
    fn difficulty_proxy_values() {
        assert!((difficulty_proxy(0.8) - 0.6).abs() < 1e-12);
        assert_eq!(difficulty_proxy(0.5), 0.0);
        assert_eq!(difficulty_proxy(0.0), 1.0);
        assert_eq!(difficulty_proxy(1.0), 1.0);
    }

    #[test]
    fn difficulty_biased_accuracy() {
        let p = heart_like(
            DecisionBehavior::DifficultyBiased {
                threshold: 0.6,
                low_accuracy: 0.6,
                high_accuracy: 1.0,
            },
            ConfidenceBehavior::AccuracyBiased { kappa: 0.05 },
        );
        let v = [Value::Num(60.0), Value::Cat("male".into())];
        assert_eq!(p.correct_probability(&case(&v, 0.7)).unwrap(), 0.6);
        assert_eq!(p.correct_probability(&case(&v, 0.6)).unwrap(), 1.0);
    }

    #[test]
    fn group_biased_accuracy() {
        let p = heart_like(
            DecisionBehavior::GroupBiased {
                group: age_group(),
                low_accuracy: 0.6,
                high_accuracy: 0.95,
            },
            ConfidenceBehavior::AccuracyBiased { kappa: 0.05 },
        );
        let young = [Value::Num(45.0), Value::Cat("male".into())];
        let old = [Value::Num(55.0), Value::Cat("male".into())];
        assert_eq!(p.correct_probability(&case(&young, 0.1)).unwrap(), 0.6);
        assert_eq!(p.correct_probability(&case(&old, 0.1)).unwrap(), 0.95);
    }

    #[test]
    fn group_biased_confidence() {
        let p = heart_like(
            DecisionBehavior::DifficultyBiased {
                threshold: 0.6,
                low_accuracy: 0.6,
                high_accuracy: 1.0,
            },
            ConfidenceBehavior::GroupBiased {
                threshold: 0.6,
                easy_confidence: 0.9,
                group: male_group(),
                low_confidence: 0.2,
                high_confidence: 1.0,
            },
        );
        let male = [Value::Num(60.0), Value::Cat("male".into())];
        let female = [Value::Num(60.0), Value::Cat("female".into())];
        assert_eq!(p.confidence(&case(&male, 0.7), 0.6).unwrap(), 0.2);
        assert_eq!(p.confidence(&case(&female, 0.7), 0.6).unwrap(), 1.0);
        assert_eq!(p.confidence(&case(&male, 0.3), 1.0).unwrap(), 0.9);
    }

    #[test]
    fn accuracy_biased_offset() {
        let p = heart_like(
            DecisionBehavior::DifficultyBiased {
                threshold: 0.6,
                low_accuracy: 0.6,
                high_accuracy: 1.0,
            },
            ConfidenceBehavior::AccuracyBiased { kappa: 0.05 },
        );
        let v = [Value::Num(60.0), Value::Cat("male".into())];
        let mut seen = std::collections::BTreeSet::new();
        for id in 0..50 {
            let c = Case {
                id,
                values: &v,
                label: 0,
                difficulty: 0.9,
            };
            let conf = p.confidence(&c, 0.6).unwrap();
            assert!((conf - 0.55).abs() < 1e-12 || (conf - 0.65).abs() < 1e-12, "{conf}");
            seen.insert((conf * 100.0).round() as i64);
            // fixed per instance
            assert_eq!(conf, p.confidence(&c, 0.6).unwrap());
        }
        assert_eq!(seen.len(), 2);
        let top = p.confidence(&case(&v, 0.1), 1.0).unwrap();
        assert!(top == CONFIDENCE_CEILING || (top - 0.95).abs() < 1e-12);
    }

    #[test]
    fn custom_group_first_match_and_exhaustion() {
        let p = heart_like(
            DecisionBehavior::CustomGroup {
                groups: vec![GroupValue {
                    group: age_group().with_label(1),
                    value: 0.6,
                }],
            },
            ConfidenceBehavior::AccuracyBiased { kappa: 0.05 },
        );
        let young = [Value::Num(45.0), Value::Cat("male".into())];
        assert_eq!(p.correct_probability(&case(&young, 0.0)).unwrap(), 0.6);
        let old = [Value::Num(65.0), Value::Cat("male".into())];
        assert!(matches!(
            p.correct_probability(&case(&old, 0.0)),
            Err(SimError::NoMatchingRule(3))
        ));
    }

    #[test]
    fn extreme_accuracies_are_deterministic() {
        let mut rng = seeding::rng(0);
        for _ in 0..200 {
            assert_eq!(sample_decision(1.0, 1, &mut rng), 1);
            assert_eq!(sample_decision(0.0, 1, &mut rng), 0);
            assert_eq!(sample_decision(0.0, 0, &mut rng), 1);
        }
    }

    #[test]
    fn profile_json_round_trip() {
        let p = heart_like(
            DecisionBehavior::GroupBiased {
                group: age_group(),
                low_accuracy: 0.6,
                high_accuracy: 0.95,
            },
            ConfidenceBehavior::GroupBiased {
                threshold: 0.6,
                easy_confidence: 0.9,
                group: male_group(),
                low_confidence: 0.2,
                high_confidence: 1.0,
            },
        );
        let s = serde_json::to_string(&p).unwrap();
        let back: HumanProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
