//! Team losses, the value test, and selective advising at inference time.

mod bundle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundle::{sha256_hex, BundleManifest};
use crate::data::Value;
use crate::estimators::{DiscretionModel, EstimatorError, TabularModel};
use crate::rules::{RuleError, RuleRef, RuleSet, Side};

#[derive(Debug, Error)]
pub enum AdvisorError {
    #[error("no rule on the {0:?} side covers the instance")]
    NoCoveringRule(Side),
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("advisor has no outcome model")]
    MissingOutcomeModel,
    #[error("malformed advisor bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Advising cost per contradiction and the two misclassification losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostSpec {
    pub alpha: f64,
    /// Loss of a false positive.
    pub lambda0: f64,
    /// Loss of a false negative.
    pub lambda1: f64,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda0: 1.0,
            lambda1: 1.0,
        }
    }
}

impl CostSpec {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdvisorError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(AdvisorError::InvalidCosts(format!("alpha = {}", self.alpha)));
        }
        if !(self.lambda0 > 0.0 && self.lambda1 > 0.0) {
            return Err(AdvisorError::InvalidCosts(format!(
                "lambda0 = {}, lambda1 = {}",
                self.lambda0, self.lambda1
            )));
        }
        Ok(())
    }
}

/// `V(y, d)`: zero when correct, `lambda0` for a false positive, `lambda1` for a false negative.
pub fn decision_loss(costs: &CostSpec, y: u8, d: u8) -> f64 {
    if y == d {
        0.0
    } else if y == 0 {
        costs.lambda0
    } else {
        costs.lambda1
    }
}

/// Expected loss of showing recommendation `yhat` to a human who decided `h`
/// and accepts contradicting advice with probability `p_accept`.
/// When `yhat == h` nothing is shown and the loss is `V(y, h)`.
pub fn expected_team_loss(costs: &CostSpec, y: u8, yhat: u8, h: u8, p_accept: f64) -> f64 {
    if yhat == h {
        return decision_loss(costs, y, h);
    }
    p_accept * decision_loss(costs, y, yhat) + (1.0 - p_accept) * decision_loss(costs, y, h) + costs.alpha
}

/// Team loss averaged over `y ~ Bernoulli(p1)`.
pub fn expected_loss_over_outcome(costs: &CostSpec, p1: f64, yhat: u8, h: u8, p_accept: f64) -> f64 {
    p1 * expected_team_loss(costs, 1, yhat, h, p_accept) + (1.0 - p1) * expected_team_loss(costs, 0, yhat, h, p_accept)
}

/// Whether recommending `y_star` beats staying silent in expectation (strictly).
pub fn psi(costs: &CostSpec, p1: f64, y_star: u8, h: u8, p_accept: f64) -> bool {
    expected_loss_over_outcome(costs, p1, y_star, h, p_accept) < expected_loss_over_outcome(costs, p1, h, h, p_accept)
}

/// What the advisor shows the human for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub offered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recommendation: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleRef>,
    /// The advisor's estimate that the human accepts this advice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_accept: Option<f64>,
}

impl Advice {
    pub fn withheld() -> Advice {
        Advice {
            offered: false,
            recommendation: None,
            confidence: None,
            rule: None,
            p_accept: None,
        }
    }

    /// The recommendation as seen downstream: withheld advice equals the human's decision.
    pub fn effective(&self, h: u8) -> u8 {
        self.recommendation.unwrap_or(h)
    }

    /// Offered advice that disagrees with `h`.
    pub fn contradicts(&self, h: u8) -> bool {
        self.offered && self.recommendation.is_some_and(|r| r != h)
    }
}

/// The selective advising rule. `positive` and `negative` are the best covering
/// rule on each side as (precision, rule), if any. Positive coverage takes
/// precedence; when the positive advice fails the value test nothing is offered.
pub fn select_advice(
    costs: &CostSpec,
    p1: f64,
    h: u8,
    c_h: f64,
    positive: Option<(f64, RuleRef)>,
    negative: Option<(f64, RuleRef)>,
    mut discretion: impl FnMut(f64, f64) -> f64,
) -> Advice {
    let (y_star, (c_m, rule)) = match (positive, negative) {
        (Some(p), _) => (1, p),
        (None, Some(n)) => (0, n),
        (None, None) => return Advice::withheld(),
    };
    let p_accept = discretion(c_m, c_h);
    if psi(costs, p1, y_star, h, p_accept) {
        Advice {
            offered: true,
            recommendation: Some(y_star),
            confidence: Some(c_m),
            rule: Some(rule),
            p_accept: Some(p_accept),
        }
    } else {
        Advice::withheld()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisorMode {
    /// Selective advising driven by the value test.
    TeamRules,
    /// Always advise: 1 when a rule covers the instance, 0 otherwise.
    TaskOnly,
}

/// A deployable advisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisor {
    pub rule_set: RuleSet,
    pub discretion: DiscretionModel,
    /// `p(y = 1 | x)`; required in team-rules mode.
    pub outcome: Option<TabularModel>,
    /// The costs the advisor was trained to believe in.
    pub costs: CostSpec,
    pub mode: AdvisorMode,
    /// Precision of predicting 0 on uncovered training instances (task-only mode).
    #[serde(default)]
    pub negative_precision: f64,
}

impl Advisor {
    /// Highest precision among rules on `side` covering the instance.
    pub fn rule_confidence(&self, values: &[Value], side: Side) -> Result<(f64, RuleRef), AdvisorError> {
        self.rule_set
            .best_covering(side, values)?
            .ok_or(AdvisorError::NoCoveringRule(side))
    }

    pub fn advise(&self, values: &[Value], h: u8, c_h: f64) -> Result<Advice, AdvisorError> {
        if self.mode == AdvisorMode::TaskOnly {
            return self.advise_task_only(values);
        }
        let positive = self.rule_set.best_covering(Side::Positive, values)?;
        let negative = if positive.is_none() {
            self.rule_set.best_covering(Side::Negative, values)?
        } else {
            None
        };
        if positive.is_none() && negative.is_none() {
            return Ok(Advice::withheld());
        }
        let outcome = self.outcome.as_ref().ok_or(AdvisorError::MissingOutcomeModel)?;
        let p1 = outcome.predict(values);
        Ok(select_advice(&self.costs, p1, h, c_h, positive, negative, |m, hc| {
            self.discretion.predict(m, hc)
        }))
    }

    /// Full-coverage advice from the positive rules.
    pub fn advise_task_only(&self, values: &[Value]) -> Result<Advice, AdvisorError> {
        Ok(match self.rule_set.best_covering(Side::Positive, values)? {
            Some((c, rule)) => Advice {
                offered: true,
                recommendation: Some(1),
                confidence: Some(c),
                rule: Some(rule),
                p_accept: None,
            },
            None => Advice {
                offered: true,
                recommendation: Some(0),
                confidence: Some(self.negative_precision),
                rule: None,
                p_accept: None,
            },
        })
    }

    /// An advisor that never offers advice.
    pub fn silent() -> Advisor {
        Advisor {
            rule_set: RuleSet::default(),
            discretion: DiscretionModel::fixed(0.0),
            outcome: None,
            costs: CostSpec::default(),
            mode: AdvisorMode::TeamRules,
            negative_precision: 0.0,
        }
    }
}
