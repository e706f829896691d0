use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, FeatureKind, FeatureSpec, Instance, Value};

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: String,
    /// Label string mapped to 1. When absent, the labels must be `0`/`1`, or
    /// the lexicographically larger of the two values becomes 1.
    #[serde(default)]
    pub positive_label: Option<String>,
    /// Columns forced to categorical even if every value parses as a number.
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Columns to ignore entirely.
    #[serde(default)]
    pub drop: Vec<String>,
}

impl LoadOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            ..Default::default()
        }
    }
}

/// Read a headed CSV file into a [`Dataset`] with an inferred schema.
///
/// A column is numeric when every cell parses as a finite float, otherwise
/// categorical. Empty cells are rejected.
pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(_) => return Err(DataError::MissingLabelColumn(opts.label_column.clone())),
    };
    let label_pos = headers
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(opts.label_column.clone()))?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != label_pos && !opts.drop.contains(&headers[c]))
        .collect();

    let mut raw: Vec<csv::StringRecord> = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| DataError::ParseError {
            row,
            column: String::new(),
            reason: e.to_string(),
        })?;
        for &c in feature_cols.iter().chain(std::iter::once(&label_pos)) {
            let cell = rec.get(c).unwrap_or("");
            if cell.is_empty() {
                return Err(DataError::ParseError {
                    row,
                    column: headers[c].clone(),
                    reason: "missing value".into(),
                });
            }
        }
        raw.push(rec);
    }

    let label_values = label_mapping(&raw, label_pos, opts)?;

    let schema: Vec<FeatureSpec> = feature_cols
        .iter()
        .map(|&c| {
            let forced = opts.categorical.contains(&headers[c]);
            let numeric = !forced
                && raw
                    .iter()
                    .all(|r| r[c].parse::<f64>().map(f64::is_finite).unwrap_or(false));
            FeatureSpec {
                name: headers[c].clone(),
                kind: if numeric {
                    FeatureKind::Numeric
                } else {
                    FeatureKind::Categorical
                },
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(raw.len());
    for (row, rec) in raw.iter().enumerate() {
        let values = feature_cols
            .iter()
            .zip(&schema)
            .map(|(&c, spec)| match spec.kind {
                FeatureKind::Numeric => Value::Num(rec[c].parse().unwrap_or(f64::NAN)),
                FeatureKind::Categorical => Value::Cat(rec[c].to_string()),
            })
            .collect();
        let cell = &rec[label_pos];
        let label = if cell == label_values[1] {
            1
        } else if cell == label_values[0] {
            0
        } else {
            return Err(DataError::NonBinaryLabel {
                row,
                value: cell.to_string(),
            });
        };
        rows.push(Instance {
            id: row,
            values,
            label,
        });
    }

    Ok(Dataset {
        schema,
        label_column: opts.label_column.clone(),
        label_values,
        rows,
        split_tags: Vec::new(),
        seed: None,
    })
}

fn label_mapping(
    raw: &[csv::StringRecord],
    label_pos: usize,
    opts: &LoadOptions,
) -> Result<[String; 2], DataError> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for (row, rec) in raw.iter().enumerate() {
        seen.insert(&rec[label_pos]);
        if seen.len() > 2 {
            return Err(DataError::NonBinaryLabel {
                row,
                value: rec[label_pos].to_string(),
            });
        }
    }
    let values: Vec<&str> = seen.into_iter().collect();
    if let Some(pos) = &opts.positive_label {
        let neg = values
            .iter()
            .find(|v| **v != pos.as_str())
            .map(|v| v.to_string())
            .unwrap_or_default();
        if !values.is_empty() && !values.contains(&pos.as_str()) {
            return Err(DataError::NonBinaryLabel {
                row: 0,
                value: values[0].to_string(),
            });
        }
        return Ok([neg, pos.clone()]);
    }
    match values.as_slice() {
        [] => Ok(["0".into(), "1".into()]),
        [one] if *one == "1" => Ok(["0".into(), "1".into()]),
        [one] => Ok([one.to_string(), "1".into()]),
        [a, b] => Ok([a.to_string(), b.to_string()]),
        _ => unreachable!("at most two label values"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn infers_schema() {
        let f = write("age,sex,y\n40,F,1\n60,M,0\n");
        let d = load_csv(f.path(), &LoadOptions::new("y")).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.schema[0].kind, FeatureKind::Numeric);
        assert_eq!(d.schema[1].kind, FeatureKind::Categorical);
        assert_eq!(d.rows[0].label, 1);
        assert_eq!(d.rows[1].values[1], Value::Cat("M".into()));
    }

    #[test]
    fn empty_file_is_missing_label() {
        let f = write("");
        let err = load_csv(f.path(), &LoadOptions::new("y")).unwrap_err();
        assert!(matches!(err, DataError::MissingLabelColumn(_)));
    }

    #[test]
    fn three_label_values_rejected() {
        let f = write("x,y\n1,a\n2,b\n3,c\n");
        let err = load_csv(f.path(), &LoadOptions::new("y")).unwrap_err();
        assert!(matches!(err, DataError::NonBinaryLabel { row: 2, .. }));
    }

    #[test]
    fn missing_cell_rejected_with_row() {
        let f = write("x,z,y\n1,2,0\n2,,1\n");
        let err = load_csv(f.path(), &LoadOptions::new("y")).unwrap_err();
        match err {
            DataError::ParseError { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "z");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn positive_label_override() {
        let f = write("x,risk\n1,Bad\n2,Good\n");
        let mut o = LoadOptions::new("risk");
        o.positive_label = Some("Bad".into());
        let d = load_csv(f.path(), &o).unwrap();
        assert_eq!(d.labels(), vec![1, 0]);
    }

    #[test]
    fn forced_categorical() {
        let f = write("cp,y\n1,0\n2,1\n");
        let mut o = LoadOptions::new("y");
        o.categorical = vec!["cp".into()];
        let d = load_csv(f.path(), &o).unwrap();
        assert_eq!(d.schema[0].kind, FeatureKind::Categorical);
    }
}
