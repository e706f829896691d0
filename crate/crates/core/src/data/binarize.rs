use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, FeatureKind, SplitTag, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Lt => "<",
            Op::Ge => ">=",
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::Gt => ">",
            Op::Le => "<=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionValue {
    Threshold(f64),
    Category(String),
}

/// An atomic boolean test on one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    /// Column position in the dataset schema; see [`Condition::resolve`].
    #[serde(default)]
    pub index: usize,
    pub op: Op,
    pub value: ConditionValue,
}

impl Condition {
    pub fn numeric(feature: impl Into<String>, index: usize, op: Op, threshold: f64) -> Self {
        Self {
            feature: feature.into(),
            index,
            op,
            value: ConditionValue::Threshold(threshold),
        }
    }

    pub fn categorical(feature: impl Into<String>, index: usize, op: Op, category: impl Into<String>) -> Self {
        Self {
            feature: feature.into(),
            index,
            op,
            value: ConditionValue::Category(category.into()),
        }
    }

    /// Evaluate against a cell. `None` when the cell type does not fit the condition.
    pub fn eval(&self, cell: &Value) -> Option<bool> {
        match (&self.value, cell, self.op) {
            (ConditionValue::Threshold(t), Value::Num(v), Op::Lt) => Some(v < t),
            (ConditionValue::Threshold(t), Value::Num(v), Op::Ge) => Some(v >= t),
            (ConditionValue::Threshold(t), Value::Num(v), Op::Eq) => Some(v == t),
            (ConditionValue::Threshold(t), Value::Num(v), Op::Ne) => Some(v != t),
            (ConditionValue::Threshold(t), Value::Num(v), Op::Gt) => Some(v > t),
            (ConditionValue::Threshold(t), Value::Num(v), Op::Le) => Some(v <= t),
            (ConditionValue::Category(c), Value::Cat(v), Op::Eq) => Some(v == c),
            (ConditionValue::Category(c), Value::Cat(v), Op::Ne) => Some(v != c),
            _ => None,
        }
    }

    /// Point `index` at the column named `feature`.
    pub fn resolve(&mut self, dataset: &Dataset) -> Result<(), DataError> {
        self.index = dataset
            .feature_index(&self.feature)
            .ok_or_else(|| DataError::UnknownFeature(self.feature.clone()))?;
        Ok(())
    }

    /// Evaluate against a full row of values.
    pub fn eval_row(&self, values: &[Value]) -> Option<bool> {
        values.get(self.index).and_then(|v| self.eval(v))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            ConditionValue::Threshold(t) => write!(f, "{} {} {}", self.feature, self.op, t),
            ConditionValue::Category(c) => write!(f, "{} {} {}", self.feature, self.op, c),
        }
    }
}

/// Boolean view of a dataset: one coverage bitset per condition, over all rows.
#[derive(Debug, Clone)]
pub struct BinarizedView {
    pub catalog: Vec<Condition>,
    /// `complement[c]` is the condition true exactly when `c` is false on the train split.
    pub complement: Vec<usize>,
    columns: Vec<FixedBitSet>,
    pub warnings: Vec<String>,
}

impl BinarizedView {
    pub fn n_conditions(&self) -> usize {
        self.catalog.len()
    }

    pub fn holds(&self, row: usize, condition: usize) -> bool {
        self.columns[condition].contains(row)
    }

    pub fn column(&self, condition: usize) -> &FixedBitSet {
        &self.columns[condition]
    }
}

/// Linear-interpolation quantile (the default in most numeric libraries) of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Turn every feature into boolean conditions using train-split statistics only.
///
/// Numeric features get `<` / `>=` pairs at the interior quantiles
/// `1/bins, ..., (bins-1)/bins`. Categorical features get one `==` per train
/// category; features with three or more categories also get `!=`. Constant
/// features are dropped with a warning.
pub fn binarize(dataset: &Dataset, bins_per_numeric: usize) -> Result<BinarizedView, DataError> {
    if bins_per_numeric < 2 {
        return Err(DataError::TooFewBins(bins_per_numeric));
    }
    let train = dataset.indices(SplitTag::Train);
    if train.is_empty() {
        return Err(DataError::NoTrainSplit);
    }
    let mut catalog = Vec::new();
    let mut complement = Vec::new();
    let mut warnings = Vec::new();

    for (fi, spec) in dataset.schema.iter().enumerate() {
        match spec.kind {
            FeatureKind::Numeric => {
                let mut vals: Vec<f64> = train
                    .iter()
                    .filter_map(|&r| dataset.rows[r].values[fi].as_num())
                    .collect();
                vals.sort_by(f64::total_cmp);
                let (min, max) = (vals[0], vals[vals.len() - 1]);
                if min == max {
                    warnings.push(format!("feature `{}` is constant on the train split; dropped", spec.name));
                    continue;
                }
                let mut cuts: Vec<f64> = (1..bins_per_numeric)
                    .map(|k| quantile(&vals, k as f64 / bins_per_numeric as f64))
                    // drop interpolation residue such as 1.9200000000000044
                    .map(|t| (t * 1e9).round() / 1e9)
                    .filter(|&t| t > min && t <= max)
                    .collect();
                cuts.dedup();
                for t in cuts {
                    let lt = catalog.len();
                    catalog.push(Condition::numeric(&spec.name, fi, Op::Lt, t));
                    catalog.push(Condition::numeric(&spec.name, fi, Op::Ge, t));
                    complement.push(lt + 1);
                    complement.push(lt);
                }
            }
            FeatureKind::Categorical => {
                let mut cats: Vec<&str> = train
                    .iter()
                    .filter_map(|&r| dataset.rows[r].values[fi].as_cat())
                    .collect();
                cats.sort_unstable();
                cats.dedup();
                match cats.len() {
                    0 | 1 => warnings.push(format!(
                        "feature `{}` is constant on the train split; dropped",
                        spec.name
                    )),
                    2 => {
                        let a = catalog.len();
                        catalog.push(Condition::categorical(&spec.name, fi, Op::Eq, cats[0]));
                        catalog.push(Condition::categorical(&spec.name, fi, Op::Eq, cats[1]));
                        complement.push(a + 1);
                        complement.push(a);
                    }
                    _ => {
                        for c in cats {
                            let a = catalog.len();
                            catalog.push(Condition::categorical(&spec.name, fi, Op::Eq, c));
                            catalog.push(Condition::categorical(&spec.name, fi, Op::Ne, c));
                            complement.push(a + 1);
                            complement.push(a);
                        }
                    }
                }
            }
        }
    }

    let columns = catalog
        .iter()
        .map(|c| {
            let mut bits = FixedBitSet::with_capacity(dataset.len());
            for (r, row) in dataset.rows.iter().enumerate() {
                if c.eval_row(&row.values).unwrap_or(false) {
                    bits.insert(r);
                }
            }
            bits
        })
        .collect();

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(BinarizedView {
        catalog,
        complement,
        columns,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSpec, Instance, SplitCounts};

    fn dataset(cols: Vec<(&str, FeatureKind, Vec<Value>)>) -> Dataset {
        let n = cols[0].2.len();
        Dataset {
            schema: cols
                .iter()
                .map(|(name, kind, _)| FeatureSpec {
                    name: name.to_string(),
                    kind: *kind,
                })
                .collect(),
            label_column: "y".into(),
            label_values: ["0".into(), "1".into()],
            rows: (0..n)
                .map(|i| Instance {
                    id: i,
                    values: cols.iter().map(|c| c.2[i].clone()).collect(),
                    label: (i % 2) as u8,
                })
                .collect(),
            split_tags: vec![SplitTag::Train; n],
            seed: None,
        }
    }

    #[test]
    fn numeric_quantile_thresholds() {
        let d = dataset(vec![(
            "x",
            FeatureKind::Numeric,
            (1..=100).map(|v| Value::Num(v as f64)).collect(),
        )]);
        let v = binarize(&d, 5).unwrap();
        let sorted: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let lts: Vec<f64> = v
            .catalog
            .iter()
            .filter(|c| c.op == Op::Lt)
            .map(|c| match c.value {
                ConditionValue::Threshold(t) => t,
                _ => unreachable!(),
            })
            .collect();
        let expected: Vec<f64> = [0.2, 0.4, 0.6, 0.8].iter().map(|&q| quantile(&sorted, q)).collect();
        assert_eq!(lts, expected);
        assert_eq!(v.catalog.iter().filter(|c| c.op == Op::Ge).count(), 4);
        // 20th percentile of 1..=100 by linear interpolation
        assert!((expected[0] - 20.8).abs() < 1e-12);
    }

    #[test]
    fn binary_categorical() {
        let d = dataset(vec![(
            "gender",
            FeatureKind::Categorical,
            ["M", "F", "F", "M"].iter().map(|s| Value::Cat(s.to_string())).collect(),
        )]);
        let v = binarize(&d, 5).unwrap();
        let names: Vec<String> = v.catalog.iter().map(|c| c.to_string()).collect();
        assert_eq!(names, vec!["gender == F", "gender == M"]);
        assert_eq!(v.complement, vec![1, 0]);
    }

    #[test]
    fn constant_feature_dropped_with_warning() {
        let d = dataset(vec![
            ("c", FeatureKind::Numeric, vec![Value::Num(3.0); 6]),
            ("x", FeatureKind::Numeric, (0..6).map(|v| Value::Num(v as f64)).collect()),
        ]);
        let v = binarize(&d, 3).unwrap();
        assert!(v.catalog.iter().all(|c| c.feature == "x"));
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn rejects_one_bin() {
        let d = dataset(vec![("x", FeatureKind::Numeric, vec![Value::Num(1.0), Value::Num(2.0)])]);
        assert!(matches!(binarize(&d, 1), Err(DataError::TooFewBins(1))));
    }

    #[test]
    fn every_condition_has_train_support_and_complement_partitions() {
        let d = dataset(vec![
            ("x", FeatureKind::Numeric, (0..40).map(|v| Value::Num((v % 7) as f64)).collect()),
            (
                "k",
                FeatureKind::Categorical,
                (0..40).map(|v| Value::Cat(format!("c{}", v % 3))).collect(),
            ),
        ]);
        let v = binarize(&d, 5).unwrap();
        for c in 0..v.n_conditions() {
            assert!(v.column(c).count_ones(..) > 0, "{}", v.catalog[c]);
            let comp = v.complement[c];
            for r in 0..d.len() {
                assert_ne!(v.holds(r, c), v.holds(r, comp));
            }
        }
    }

    #[test]
    fn test_rows_do_not_change_catalog() {
        let base: Vec<Value> = (0..50).map(|v| Value::Num(v as f64)).collect();
        let d = dataset(vec![("x", FeatureKind::Numeric, base)]);
        let d = d.split(SplitCounts::new(30, 10, 10), 5).unwrap();
        let mut e = d.clone();
        for r in e.indices(SplitTag::Test) {
            e.rows[r].values[0] = Value::Num(1e6);
        }
        assert_eq!(binarize(&d, 5).unwrap().catalog, binarize(&e, 5).unwrap().catalog);
    }
}
