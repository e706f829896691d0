//! Tabular datasets: CSV ingestion, seeded splits and binarization.

mod binarize;
mod load;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binarize::{binarize, quantile, BinarizedView, Condition, ConditionValue, Op};
pub use load::{load_csv, LoadOptions};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),
    #[error("label at row {row} is not one of the two label values (found `{value}`)")]
    NonBinaryLabel { row: usize, value: String },
    #[error("cannot parse row {row}, column `{column}`: {reason}")]
    ParseError {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("split counts {requested} exceed dataset size {available}")]
    CountsExceedSize { requested: usize, available: usize },
    #[error("bins per numeric feature must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("dataset has no train split")]
    NoTrainSplit,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// A single cell value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

/// One labelled decision instance. Values are aligned with the dataset schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: usize,
    pub values: Vec<Value>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    /// Rows left over when the split counts do not use the whole dataset.
    Unused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub const fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Vec<FeatureSpec>,
    pub label_column: String,
    /// Original label strings for 0 and 1.
    pub label_values: [String; 2],
    pub rows: Vec<Instance>,
    #[serde(default)]
    pub split_tags: Vec<SplitTag>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|f| f.name == name)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Row indices carrying `tag`, in row order.
    pub fn indices(&self, tag: SplitTag) -> Vec<usize> {
        self.split_tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == tag)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_split(&self) -> bool {
        self.split_tags.len() == self.rows.len() && !self.rows.is_empty()
    }

    /// Seeded shuffle followed by contiguous assignment to train, val and test.
    pub fn split(&self, counts: SplitCounts, seed: u64) -> Result<Dataset, DataError> {
        if counts.total() > self.len() {
            return Err(DataError::CountsExceedSize {
                requested: counts.total(),
                available: self.len(),
            });
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut crate::seeding::rng(seed));
        let mut tags = vec![SplitTag::Unused; self.len()];
        for (pos, &row) in order.iter().enumerate() {
            tags[row] = if pos < counts.train {
                SplitTag::Train
            } else if pos < counts.train + counts.val {
                SplitTag::Val
            } else if pos < counts.total() {
                SplitTag::Test
            } else {
                SplitTag::Unused
            };
        }
        let mut out = self.clone();
        out.split_tags = tags;
        out.seed = Some(seed);
        Ok(out)
    }

    /// Number of rows per split tag.
    pub fn split_sizes(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for t in &self.split_tags {
            let k = match t {
                SplitTag::Train => "train",
                SplitTag::Val => "val",
                SplitTag::Test => "test",
                SplitTag::Unused => "unused",
            };
            *m.entry(k).or_insert(0) += 1;
        }
        m
    }

    pub fn save_json(&self, path: &Path) -> Result<(), DataError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Dataset, DataError> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}
