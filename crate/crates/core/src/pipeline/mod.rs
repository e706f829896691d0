//! Config-driven orchestration: data preparation, human simulation,
//! interaction logging, estimator fitting, training, evaluation and studies.

mod commands;
mod config;
mod experiment;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{
    cmd_case_study, cmd_collect_interactions, cmd_degrade_adb, cmd_evaluate, cmd_fit_discretion, cmd_prepare,
    cmd_simulate_human, cmd_sweep, cmd_train, advisor_dir_name, load_prepared, CaseStudy, NoiseRow, PairedRow,
    TrainSummary,
};
pub use config::{
    default_alphas, DatasetConfig, EstimatorConfig, EvalConfig, HumanConfig, HumanPreset, PipelineConfig, ENV_OUT,
    ENV_WORKERS,
};
pub use experiment::{
    build_profile, build_trials, evaluate_policy, interaction_log, load_dataset, prepare, prepare_from, sweep,
    trial_seed, Prepared, Trial,
};
use crate::advisor::{sha256_hex, AdvisorError};
use crate::data::DataError;
use crate::estimators::EstimatorError;
use crate::eval::EvalError;
use crate::humansim::SimError;
use crate::rules::RuleError;
use crate::trainer::TrainError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("missing artifact {0}; run the producing subcommand first")]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 training, 5 evaluation.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingArtifact(_)
            | PipelineError::Data(_)
            | PipelineError::Sim(_)
            | PipelineError::Io { .. }
            | PipelineError::Json(_)
            | PipelineError::Csv(_) => 3,
            PipelineError::Estimator(_) | PipelineError::Rule(_) | PipelineError::Train(_) => 4,
            PipelineError::Advisor(_) | PipelineError::Eval(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "ConfigError",
            PipelineError::MissingArtifact(_) => "MissingArtifact",
            PipelineError::Data(_) => "DataError",
            PipelineError::Sim(_) => "SimError",
            PipelineError::Estimator(_) => "EstimatorError",
            PipelineError::Rule(_) => "RuleError",
            PipelineError::Train(_) => "TrainError",
            PipelineError::Advisor(_) => "AdvisorError",
            PipelineError::Eval(_) => "EvalError",
            PipelineError::Io { .. } => "IoError",
            PipelineError::Json(_) => "JsonError",
            PipelineError::Csv(_) => "CsvError",
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Provenance of one subcommand run. Two runs with equal manifests wrote equal files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub crate_version: String,
    /// SHA-256 of the effective config serialized as JSON, without the output
    /// root and worker count (neither changes any result).
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every file written, keyed by path relative to the output root.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let mut seeds = BTreeMap::new();
        seeds.insert("master".to_string(), config.seed);
        seeds.insert("human".to_string(), config.human.seed);
        let mut hashed = config.clone();
        hashed.out = PathBuf::new();
        hashed.workers = None;
        Ok(RunManifest {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(serde_json::to_string(&hashed)?.as_bytes()),
            seeds,
            artifacts: BTreeMap::new(),
        })
    }

    /// Hash `files` (relative to `root`) and write the manifest under `root/manifests`.
    pub fn finish(mut self, root: &Path, files: &[PathBuf]) -> Result<PathBuf, PipelineError> {
        for f in files {
            let full = root.join(f);
            let bytes = std::fs::read(&full).map_err(io_err(&full))?;
            self.artifacts
                .insert(f.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes));
        }
        let dir = root.join("manifests");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{}.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(&self)?).map_err(io_err(&path))?;
        Ok(path)
    }
}
