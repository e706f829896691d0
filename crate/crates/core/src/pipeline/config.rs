use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::advisor::CostSpec;
use crate::data::synthetic::Domain;
use crate::data::{LoadOptions, SplitCounts};
use crate::estimators::{default_outcome_grid, DiscretionParams, GbdtParams};
use crate::humansim::presets::{ConfidenceKind, DecisionKind};
use crate::humansim::{AdbParams, Group};
use crate::trainer::{TrainerConfig, Variant};

/// Environment variable overriding the output root.
pub const ENV_OUT: &str = "SELECTIVE_ADVISOR_OUT";
/// Environment variable overriding the worker count.
pub const ENV_WORKERS: &str = "SELECTIVE_ADVISOR_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Bundled domain; supplies the CSV, load options and split unless overridden.
    pub domain: Option<Domain>,
    pub path: Option<PathBuf>,
    pub load: Option<LoadOptions>,
    pub split: Option<SplitCounts>,
    pub split_seed: Option<u64>,
    /// Quantile bins per numeric feature.
    pub bins: usize,
    /// Share of the train split used to log interactions with the bootstrap
    /// advisor; the rest trains the advisor.
    pub interaction_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            domain: Some(Domain::Heart),
            path: None,
            load: None,
            split: None,
            split_seed: None,
            bins: 5,
            interaction_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanPreset {
    /// Decision and confidence kinds of the domain's standard experts.
    Standard,
    /// Cardiologist with asymmetric error and acceptance behavior (heart only).
    AsymmetricHeart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanConfig {
    pub preset: HumanPreset,
    pub decision: DecisionKind,
    pub confidence: ConfidenceKind,
    /// Explicit profile file; takes precedence over the preset.
    pub profile: Option<PathBuf>,
    /// Replaces the profile's acceptance parameters.
    pub adb: Option<AdbParams>,
    /// Acceptance noise of the human the advisor is evaluated against.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for HumanConfig {
    fn default() -> Self {
        Self {
            preset: HumanPreset::Standard,
            decision: DecisionKind::DifficultyBiased,
            confidence: ConfidenceKind::AccuracyBiased,
            profile: None,
            adb: None,
            noise_level: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub outcome_folds: usize,
    pub outcome_grid: Vec<GbdtParams>,
    pub discretion: DiscretionParams,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            outcome_folds: 5,
            outcome_grid: default_outcome_grid(),
            discretion: DiscretionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Redraws of the human per evaluation.
    pub repetitions: usize,
    /// Independent trainings per sweep point.
    pub training_repetitions: usize,
    pub groups: Vec<Group>,
    /// Fall back to the human alone when validation value added is negative.
    pub gate: bool,
    pub noise_levels: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            repetitions: 50,
            training_repetitions: 10,
            groups: Vec::new(),
            gate: false,
            noise_levels: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

pub fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub human: HumanConfig,
    pub estimators: EstimatorConfig,
    pub trainer: TrainerConfig,
    /// Costs of the deployment context; `alpha` is replaced by each grid point.
    pub costs: CostSpec,
    pub variants: Vec<Variant>,
    pub alphas: Vec<f64>,
    pub eval: EvalConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            human: HumanConfig::default(),
            estimators: EstimatorConfig::default(),
            trainer: TrainerConfig::default(),
            costs: CostSpec::default(),
            variants: Variant::ALL.to_vec(),
            alphas: default_alphas(),
            eval: EvalConfig::default(),
            seed: 0,
            out: PathBuf::from("runs"),
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn for_domain(domain: Domain) -> Self {
        Self {
            dataset: DatasetConfig {
                domain: Some(domain),
                ..DatasetConfig::default()
            },
            ..Self::default()
        }
    }

    /// Asymmetric-loss cardiology setup: false negatives cost three times as
    /// much, and results are broken down by sex and by young patients with disease.
    pub fn heart_case_study() -> Self {
        let cond = |feature: &str, op, value: crate::data::ConditionValue| crate::data::Condition {
            feature: feature.into(),
            index: 0,
            op,
            value,
        };
        use crate::data::{ConditionValue::*, Op};
        Self {
            human: HumanConfig {
                preset: HumanPreset::AsymmetricHeart,
                ..HumanConfig::default()
            },
            costs: CostSpec {
                alpha: 0.0,
                lambda0: 1.0,
                lambda1: 3.0,
            },
            variants: vec![Variant::Tr, Variant::TaskOnly],
            alphas: vec![0.1],
            eval: EvalConfig {
                groups: vec![
                    Group::new(vec![cond("sex", Op::Eq, Category("male".into()))]).named("male"),
                    Group::new(vec![cond("sex", Op::Eq, Category("female".into()))]).named("female"),
                    Group::new(vec![cond("age", Op::Lt, Threshold(50.0))])
                        .with_label(1)
                        .named("young_with_disease"),
                ],
                ..EvalConfig::default()
            },
            ..Self::for_domain(Domain::Heart)
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Apply the output-root and worker environment overrides.
    pub fn with_env(mut self) -> Self {
        if let Ok(out) = std::env::var(ENV_OUT) {
            if !out.is_empty() {
                self.out = PathBuf::from(out);
            }
        }
        if let Some(n) = std::env::var(ENV_WORKERS).ok().and_then(|v| v.parse().ok()) {
            self.workers = Some(n);
        }
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let d = &self.dataset;
        match (&d.path, d.domain) {
            (Some(p), _) if !p.exists() => return bad(format!("dataset file {} does not exist", p.display())),
            (Some(_), None) if d.load.is_none() => {
                return bad("a dataset path without a domain needs `load` options".into())
            }
            (Some(_), None) if d.split.is_none() => return bad("a dataset path without a domain needs `split`".into()),
            (None, None) => return bad("dataset needs a `domain` or a `path`".into()),
            _ => {}
        }
        if d.bins < 2 {
            return bad(format!("dataset.bins = {} (need at least 2)", d.bins));
        }
        if !(d.interaction_fraction > 0.0 && d.interaction_fraction < 1.0) {
            return bad(format!("dataset.interaction_fraction = {}", d.interaction_fraction));
        }
        if let Some(p) = &self.human.profile {
            if !p.exists() {
                return bad(format!("profile file {} does not exist", p.display()));
            }
        } else if self.human.preset == HumanPreset::Standard && d.domain.is_none() {
            return bad("a custom dataset needs an explicit human profile file".into());
        }
        if !(0.0..=1.0).contains(&self.human.noise_level) {
            return bad(format!("human.noise_level = {}", self.human.noise_level));
        }
        if self.estimators.outcome_folds < 2 || self.estimators.outcome_grid.is_empty() {
            return bad("estimators need at least 2 folds and a non-empty grid".into());
        }
        self.trainer.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.costs.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.variants.is_empty() {
            return bad("no variants".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad(format!("alphas must be a non-empty list of non-negative numbers: {:?}", self.alphas));
        }
        if self.eval.repetitions == 0 || self.eval.training_repetitions == 0 {
            return bad("eval repetitions must be at least 1".into());
        }
        if self.eval.noise_levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad(format!("noise levels outside [0, 1]: {:?}", self.eval.noise_levels));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}
