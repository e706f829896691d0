//! Interpretable rule-set advisors for human decision-makers.
//!
//! An advisor built here decides, instance by instance, whether contradicting
//! a human's independent judgment is worth it: the advice must be expected to
//! reduce the team's decision loss by more than the cost the human pays to
//! reconcile it, given how likely this particular human is to accept it.
//!
//! The crate is organized as a pipeline:
//!
//! - [`data`]: CSV ingestion, seeded splits, and quantile binarization into
//!   boolean conditions.
//! - [`rules`]: conjunctive rules, rule sets, and random-forest candidate mining.
//! - [`humansim`]: simulated experts (decision accuracy, self-reported
//!   confidence, and advice-acceptance behavior).
//! - [`estimators`]: logistic regression, gradient-boosted trees, the
//!   discretion model, and interaction logging.
//! - [`advisor`]: losses, the value test, and selective advising at inference.
//! - [`trainer`]: simulated annealing over rule sets and the baseline variants.
//! - [`eval`]: team-loss metrics, alpha sweeps, the validation gate, and
//!   acceptance-noise studies.
//! - [`pipeline`]: config-driven orchestration used by the command-line tool.

pub mod advisor;
pub mod data;
pub mod estimators;
pub mod eval;
pub mod humansim;
pub mod pipeline;
pub mod rules;
pub mod seeding;
pub mod trainer;


pub use advisor::{Advice, Advisor, AdvisorMode, CostSpec};
pub use data::{Dataset, FeatureKind, Instance, SplitCounts, SplitTag, Value};
pub use eval::{EvalSpec, MetricsReport};
pub use humansim::{AdbParams, HumanProfile};
pub use pipeline::PipelineConfig;
pub use rules::{Condition, Rule, RuleSet};
pub use trainer::{TrainerConfig, Variant};
