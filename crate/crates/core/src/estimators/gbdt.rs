//! Gradient-boosted regression trees on the logistic loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_labels, log_loss, sigmoid, EstimatorError};
use crate::data::quantile;
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Candidate thresholds per feature (quantile cut points).
    pub max_bins: usize,
    /// Fraction of the rows held out to pick the number of trees; 0 disables early stopping.
    pub validation_fraction: f64,
    pub early_stopping_rounds: usize,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
            max_bins: 64,
            validation_fraction: 0.2,
            early_stopping_rounds: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
}

/// Per-feature cut points and each row's bin index.
struct Binned {
    cuts: Vec<Vec<f64>>,
    bins: Vec<Vec<u16>>,
}

impl Binned {
    fn new(x: &[Vec<f64>], max_bins: usize) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut cuts = Vec::with_capacity(d);
        let mut bins = vec![vec![0u16; d]; x.len()];
        for f in 0..d {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let c: Vec<f64> = if vals.len() <= max_bins {
                // midpoints between consecutive distinct values
                vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                let mut c: Vec<f64> = (1..max_bins)
                    .map(|i| quantile(&vals, i as f64 / max_bins as f64))
                    .collect();
                c.dedup();
                c
            };
            for (row, b) in x.iter().zip(bins.iter_mut()) {
                b[f] = c.partition_point(|&t| t < row[f]) as u16;
            }
            cuts.push(c);
        }
        Binned { cuts, bins }
    }
}

impl Gbdt {
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &GbdtParams) -> Result<Gbdt, EstimatorError> {
        check_labels(y)?;
        if params.max_depth == 0 || params.n_trees == 0 || params.learning_rate <= 0.0 {
            return Err(EstimatorError::InvalidParameter(format!("{params:?}")));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        let n_val = (params.validation_fraction * x.len() as f64).floor() as usize;
        let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) = if n_val >= 10 && x.len() - n_val >= 10 {
            order.shuffle(&mut seeding::rng(params.seed));
            let (v, f) = order.split_at(n_val);
            let (mut f, mut v) = (f.to_vec(), v.to_vec());
            f.sort_unstable();
            v.sort_unstable();
            (f, v)
        } else {
            (order, Vec::new())
        };
        let fy: Vec<u8> = fit_idx.iter().map(|&i| y[i]).collect();
        if check_labels(&fy).is_err() {
            return Err(EstimatorError::SingleClassTrainingSet);
        }
        let fx: Vec<Vec<f64>> = fit_idx.iter().map(|&i| x[i].clone()).collect();
        let binned = Binned::new(&fx, params.max_bins.max(2));

        let mean = fy.iter().map(|&v| v as f64).sum::<f64>() / fy.len() as f64;
        let base_score = (mean / (1.0 - mean)).ln();
        let mut margin = vec![base_score; fx.len()];
        let mut val_margin = vec![base_score; val_idx.len()];
        let val_y: Vec<u8> = val_idx.iter().map(|&i| y[i]).collect();

        let mut trees = Vec::new();
        let mut best = (f64::INFINITY, 0usize);
        let mut grad = vec![0.0; fx.len()];
        let mut hess = vec![0.0; fx.len()];
        for t in 0..params.n_trees {
            for i in 0..fx.len() {
                let p = sigmoid(margin[i]);
                grad[i] = p - fy[i] as f64;
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let rows: Vec<usize> = (0..fx.len()).collect();
            let tree = grow(&binned, &grad, &hess, rows, 0, params);
            for (m, r) in margin.iter_mut().zip(&fx) {
                *m += params.learning_rate * tree.predict(r);
            }
            for (m, &i) in val_margin.iter_mut().zip(&val_idx) {
                *m += params.learning_rate * tree.predict(&x[i]);
            }
            trees.push(tree);
            if !val_idx.is_empty() {
                let p: Vec<f64> = val_margin.iter().map(|&m| sigmoid(m)).collect();
                let loss = log_loss(&p, &val_y);
                if loss < best.0 - 1e-12 {
                    best = (loss, t + 1);
                } else if t + 1 - best.1 >= params.early_stopping_rounds {
                    break;
                }
            }
        }
        if !val_idx.is_empty() {
            trees.truncate(best.1.max(1));
        }
        Ok(Gbdt {
            base_score,
            learning_rate: params.learning_rate,
            trees,
        })
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn grow(binned: &Binned, grad: &[f64], hess: &[f64], rows: Vec<usize>, depth: usize, params: &GbdtParams) -> Node {
    let g: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h: f64 = rows.iter().map(|&i| hess[i]).sum();
    let leaf = Node::Leaf {
        value: leaf_value(g, h, params.lambda),
    };
    if depth >= params.max_depth || rows.len() < 2 {
        return leaf;
    }
    let parent = score(g, h, params.lambda);
    // (gain, feature, last bin going left)
    let mut best: Option<(f64, usize, usize)> = None;
    for (f, cuts) in binned.cuts.iter().enumerate() {
        if cuts.is_empty() {
            continue;
        }
        let nb = cuts.len() + 1;
        let mut hg = vec![0.0; nb];
        let mut hh = vec![0.0; nb];
        for &i in &rows {
            let b = binned.bins[i][f] as usize;
            hg[b] += grad[i];
            hh[b] += hess[i];
        }
        let (mut gl, mut hl) = (0.0, 0.0);
        for b in 0..nb - 1 {
            gl += hg[b];
            hl += hh[b];
            let (gr, hr) = (g - gl, h - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = score(gl, hl, params.lambda) + score(gr, hr, params.lambda) - parent;
            // zero-gain splits are kept so that deeper levels can separate interactions
            if gain > -1e-12 && best.is_none_or(|(bg, _, _)| gain > bg + 1e-12) {
                best = Some((gain, f, b));
            }
        }
    }
    let Some((_, feature, bin)) = best else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| binned.bins[i][feature] as usize <= bin);
    if left.is_empty() || right.is_empty() {
        return leaf;
    }
    Node::Split {
        feature,
        threshold: binned.cuts[feature][bin],
        left: Box::new(grow(binned, grad, hess, left, depth + 1, params)),
        right: Box::new(grow(binned, grad, hess, right, depth + 1, params)),
    }
}
