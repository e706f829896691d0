//! Auxiliary probabilistic models: the logistic bootstrap / difficulty model,
//! the boosted-tree outcome model, and the learned discretion model.

mod discretion;
mod encoder;
mod gbdt;
mod logistic;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use discretion::{
    collect_interactions, fit_discretion, read_interactions, write_interactions, DiscretionModel,
    DiscretionParams, InteractionRecord,
};
pub use encoder::{EncodedColumn, FeatureEncoder};
pub use gbdt::{Gbdt, GbdtParams, Node};
pub use logistic::{LogisticModel, LogisticParams};

use crate::data::{Dataset, Value};
use crate::humansim::SimError;
use crate::seeding;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains a single class")]
    SingleClassTrainingSet,
    #[error("model did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("invalid estimator parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least 2 interaction records, got {0}")]
    InsufficientRecords(usize),
    #[error("interaction records are all accepts or all rejects")]
    SingleClassRecords,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy, with probabilities clipped away from 0 and 1.
pub fn log_loss(p: &[f64], y: &[u8]) -> f64 {
    let eps = 1e-15;
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(eps, 1.0 - eps);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / p.len().max(1) as f64
}

/// Area under the ROC curve (Mann-Whitney, ties count one half).
/// `None` when either class is absent.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // average ranks over tied groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

pub(crate) fn check_labels(y: &[u8]) -> Result<(), EstimatorError> {
    if y.is_empty() {
        return Err(EstimatorError::EmptyTrainingSet);
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(EstimatorError::SingleClassTrainingSet);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilisticClassifier {
    LinearLogistic(LogisticModel),
    BoostedTrees(Gbdt),
}

impl ProbabilisticClassifier {
    /// Probability of label 1.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            ProbabilisticClassifier::LinearLogistic(m) => m.predict_proba(x),
            ProbabilisticClassifier::BoostedTrees(m) => m.predict_proba(x),
        }
    }
}

/// Cross-validated log-loss of every grid point and the one chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub folds: usize,
    pub grid: Vec<GbdtParams>,
    pub cv_log_loss: Vec<f64>,
    pub chosen: usize,
}

/// A classifier together with the encoder that turns dataset rows into its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    pub encoder: FeatureEncoder,
    pub classifier: ProbabilisticClassifier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<GridSearch>,
}

impl TabularModel {
    /// `p(y = 1 | x)`.
    pub fn predict(&self, values: &[Value]) -> f64 {
        self.classifier.predict_proba(&self.encoder.encode(values))
    }

    pub fn predict_rows(&self, dataset: &Dataset, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&r| self.predict(&dataset.rows[r].values)).collect()
    }

    /// Predictions for every dataset row, indexed by row.
    pub fn predict_all(&self, dataset: &Dataset) -> Vec<f64> {
        dataset.rows.iter().map(|r| self.predict(&r.values)).collect()
    }
}

fn labels_of(dataset: &Dataset, rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&r| dataset.rows[r].label).collect()
}

/// Logistic regression on `rows`.
pub fn fit_logistic(dataset: &Dataset, rows: &[usize], params: &LogisticParams) -> Result<TabularModel, EstimatorError> {
    let y = labels_of(dataset, rows);
    check_labels(&y)?;
    let encoder = FeatureEncoder::fit(dataset, rows)?;
    let x = encoder.encode_rows(dataset, rows);
    let model = LogisticModel::fit(&x, &y, params)?;
    Ok(TabularModel {
        encoder,
        classifier: ProbabilisticClassifier::LinearLogistic(model),
        selection: None,
    })
}

/// Default hyperparameter grid for the outcome model.
pub fn default_outcome_grid() -> Vec<GbdtParams> {
    let mut grid = Vec::new();
    for max_depth in [2, 3] {
        for learning_rate in [0.05, 0.1] {
            grid.push(GbdtParams {
                max_depth,
                learning_rate,
                ..GbdtParams::default()
            });
        }
    }
    grid
}

/// Boosted trees with hyperparameters chosen by `folds`-fold cross-validated
/// log-loss; ties keep the earliest grid point. The final model is refit on all rows.
pub fn fit_outcome_model(
    dataset: &Dataset,
    rows: &[usize],
    folds: usize,
    grid: &[GbdtParams],
    seed: u64,
) -> Result<TabularModel, EstimatorError> {
    if folds < 2 {
        return Err(EstimatorError::InvalidParameter(format!("folds = {folds}")));
    }
    if grid.is_empty() {
        return Err(EstimatorError::InvalidParameter("empty grid".into()));
    }
    let y = labels_of(dataset, rows);
    check_labels(&y)?;
    let encoder = FeatureEncoder::fit(dataset, rows)?;
    let x = encoder.encode_rows(dataset, rows);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut seeding::rng(seeding::derive_str(seed, "cv")));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; rows.len()];
        for (k, &i) in order.iter().enumerate() {
            f[i] = k % folds;
        }
        f
    };

    let mut cv_log_loss = Vec::with_capacity(grid.len());
    for (g, params) in grid.iter().enumerate() {
        let mut preds = vec![0.0; rows.len()];
        for k in 0..folds {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| fold_of[i] != k);
            let tx: Vec<Vec<f64>> = tr.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
            let p = GbdtParams {
                seed: seeding::derive(seed, (g * folds + k) as u64),
                ..params.clone()
            };
            let m = Gbdt::fit(&tx, &ty, &p)?;
            for &i in &te {
                preds[i] = m.predict_proba(&x[i]);
            }
        }
        cv_log_loss.push(log_loss(&preds, &y));
    }
    let chosen = cv_log_loss
        .iter()
        .enumerate()
        .fold(0, |best, (i, &l)| if l < cv_log_loss[best] { i } else { best });
    let params = GbdtParams {
        seed: seeding::derive_str(seed, "final"),
        ..grid[chosen].clone()
    };
    let model = Gbdt::fit(&x, &y, &params)?;
    Ok(TabularModel {
        encoder,
        classifier: ProbabilisticClassifier::BoostedTrees(model),
        selection: Some(GridSearch {
            folds,
            grid: grid.to_vec(),
            cv_log_loss,
            chosen,
        }),
    })
}
