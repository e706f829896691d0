use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::data::{Dataset, FeatureKind, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncodedColumn {
    Numeric { index: usize, mean: f64, scale: f64 },
    OneHot { index: usize, category: String },
}

/// Maps a schema-aligned row to a dense numeric vector: standardized numerics
/// and one indicator per category seen in the fitting rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub columns: Vec<EncodedColumn>,
}

impl FeatureEncoder {
    pub fn fit(dataset: &Dataset, rows: &[usize]) -> Result<FeatureEncoder, EstimatorError> {
        if rows.is_empty() {
            return Err(EstimatorError::EmptyTrainingSet);
        }
        let mut columns = Vec::new();
        for (index, spec) in dataset.schema.iter().enumerate() {
            match spec.kind {
                FeatureKind::Numeric => {
                    let vals: Vec<f64> = rows
                        .iter()
                        .map(|&r| dataset.rows[r].values[index].as_num().unwrap_or(0.0))
                        .collect();
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
                    columns.push(EncodedColumn::Numeric { index, mean, scale });
                }
                FeatureKind::Categorical => {
                    let cats: BTreeSet<&str> = rows
                        .iter()
                        .filter_map(|&r| dataset.rows[r].values[index].as_cat())
                        .collect();
                    // k - 1 indicators keep the design matrix full rank
                    for c in cats.into_iter().skip(1) {
                        columns.push(EncodedColumn::OneHot {
                            index,
                            category: c.to_string(),
                        });
                    }
                }
            }
        }
        Ok(FeatureEncoder { columns })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn encode(&self, values: &[Value]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match c {
                EncodedColumn::Numeric { index, mean, scale } => {
                    (values[*index].as_num().unwrap_or(*mean) - mean) / scale
                }
                EncodedColumn::OneHot { index, category } => {
                    f64::from(values[*index].as_cat() == Some(category.as_str()))
                }
            })
            .collect()
    }

    pub fn encode_rows(&self, dataset: &Dataset, rows: &[usize]) -> Vec<Vec<f64>> {
        rows.iter().map(|&r| self.encode(&dataset.rows[r].values)).collect()
    }
}
