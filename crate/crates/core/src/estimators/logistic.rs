use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_labels, sigmoid, EstimatorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// L2 penalty on the weights (not the intercept).
    pub ridge: f64,
    pub max_iter: usize,
    /// Largest Newton step accepted as converged.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
}

impl LogisticModel {
    /// Newton-Raphson on the ridge-penalized log-likelihood.
    pub fn fit(x: &[Vec<f64>], y: &[u8], params: &LogisticParams) -> Result<LogisticModel, EstimatorError> {
        check_labels(y)?;
        let n = x.len();
        let d = x[0].len() + 1;
        let design = DMatrix::from_fn(n, d, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
        let target = DVector::from_iterator(n, y.iter().map(|&v| v as f64));
        let mut beta = DVector::<f64>::zeros(d);
        let mut penalty = DMatrix::<f64>::identity(d, d) * params.ridge;
        penalty[(0, 0)] = 0.0;

        for it in 1..=params.max_iter {
            let eta = &design * &beta;
            let p = eta.map(sigmoid);
            let w = p.map(|v| (v * (1.0 - v)).max(1e-12));
            let grad = design.transpose() * (&p - &target) + &penalty * &beta;
            let mut hess = &penalty + DMatrix::<f64>::identity(d, d) * 1e-10;
            for i in 0..n {
                let row = design.row(i);
                hess += row.transpose() * row * w[i];
            }
            let step = hess
                .lu()
                .solve(&grad)
                .ok_or(EstimatorError::NonConvergence(it))?;
            beta -= &step;
            if !beta.iter().all(|v| v.is_finite()) {
                return Err(EstimatorError::NonConvergence(it));
            }
            if step.amax() < params.tol {
                return Ok(LogisticModel {
                    intercept: beta[0],
                    weights: beta.iter().skip(1).copied().collect(),
                    iterations: it,
                });
            }
        }
        Err(EstimatorError::NonConvergence(params.max_iter))
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z = self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        sigmoid(z)
    }
}
