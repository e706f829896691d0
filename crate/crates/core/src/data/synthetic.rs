//! Deterministic stand-ins for the three benchmark domains.
//!
//! Each generator produces a table with the row count, label balance and the
//! group-defining columns of its domain (cardiology screening, consumer
//! credit, employee attrition). Labels are drawn from a logistic model over
//! the features, with the scale tuned so that the share of instances a
//! logistic model finds hard matches the difficulty thresholds used by the
//! preset human profiles.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, FeatureKind, FeatureSpec, Instance, LoadOptions, SplitCounts, Value};

/// The three bundled domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Heart,
    Fico,
    Hr,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Heart, Domain::Fico, Domain::Hr];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Heart => "heart",
            Domain::Fico => "fico",
            Domain::Hr => "hr",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Domain::Heart => "heart.csv",
            Domain::Fico => "fico.csv",
            Domain::Hr => "hr.csv",
        }
    }

    /// Train / validation / test instance counts.
    pub fn split_counts(self) -> SplitCounts {
        match self {
            Domain::Heart => SplitCounts::new(505, 87, 127),
            Domain::Fico => SplitCounts::new(6120, 801, 1080),
            Domain::Hr => SplitCounts::new(568, 38, 143),
        }
    }

    pub fn n_rows(self) -> usize {
        self.split_counts().total()
    }

    pub fn load_options(self) -> LoadOptions {
        match self {
            Domain::Heart => LoadOptions::new("target"),
            Domain::Fico => LoadOptions {
                label_column: "RiskPerformance".into(),
                positive_label: Some("Bad".into()),
                ..Default::default()
            },
            Domain::Hr => LoadOptions {
                label_column: "Attrition".into(),
                positive_label: Some("Yes".into()),
                ..Default::default()
            },
        }
    }

    /// Default generator seed for the bundled CSV files.
    pub const fn bundled_seed(self) -> u64 {
        match self {
            Domain::Heart => 11,
            Domain::Fico => 12,
            Domain::Hr => 13,
        }
    }

    /// Seed used to split the bundled files.
    pub const fn split_seed(self) -> u64 {
        0
    }

    fn label_model(self) -> (f64, f64) {
        // (scale, intercept) applied to the standardized risk score
        match self {
            Domain::Heart => (1.8, 0.0),
            Domain::Fico => (1.3, 0.1),
            Domain::Hr => (1.6, -2.6),
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "heart" | "heart_disease" => Ok(Domain::Heart),
            "fico" => Ok(Domain::Fico),
            "hr" => Ok(Domain::Hr),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

struct Builder {
    rng: ChaCha8Rng,
    schema: Vec<FeatureSpec>,
    columns: Vec<Vec<Value>>,
    score: Vec<f64>,
}

impl Builder {
    fn new(seed: u64, n: usize) -> Self {
        Self {
            rng: crate::seeding::rng(seed),
            schema: Vec::new(),
            columns: Vec::new(),
            score: vec![0.0; n],
        }
    }

    fn n(&self) -> usize {
        self.score.len()
    }

    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        Normal::new(mean, sd).expect("valid normal").sample(&mut self.rng)
    }

    /// Integer-valued clamped normal column; `weight` is applied per standard deviation.
    fn int_normal(&mut self, name: &str, mean: f64, sd: f64, lo: f64, hi: f64, weight: f64) -> Vec<f64> {
        let vals: Vec<f64> = (0..self.n())
            .map(|_| self.normal(mean, sd).round().clamp(lo, hi))
            .collect();
        self.push_numeric(name, &vals, weight, mean, sd);
        vals
    }

    fn push_numeric(&mut self, name: &str, vals: &[f64], weight: f64, center: f64, spread: f64) {
        for (s, v) in self.score.iter_mut().zip(vals) {
            *s += weight * (v - center) / spread;
        }
        self.schema.push(FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Numeric,
        });
        self.columns.push(vals.iter().map(|&v| Value::Num(v)).collect());
    }

    fn categorical(&mut self, name: &str, levels: &[(&str, f64, f64)]) -> Vec<usize> {
        let total: f64 = levels.iter().map(|l| l.1).sum();
        let mut picks = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let mut u = self.rng.random::<f64>() * total;
            let mut k = levels.len() - 1;
            for (j, l) in levels.iter().enumerate() {
                if u < l.1 {
                    k = j;
                    break;
                }
                u -= l.1;
            }
            self.score[i] += levels[k].2;
            picks.push(k);
        }
        self.schema.push(FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical,
        });
        self.columns
            .push(picks.iter().map(|&k| Value::Cat(levels[k].0.to_string())).collect());
        picks
    }

    fn finish(mut self, domain: Domain, label_column: &str, label_values: [&str; 2]) -> Dataset {
        let n = self.n() as f64;
        let mean = self.score.iter().sum::<f64>() / n;
        let sd = (self.score.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        let (scale, intercept) = domain.label_model();
        let rows = (0..self.n())
            .map(|i| {
                let z = scale * (self.score[i] - mean) / sd + intercept;
                let p = 1.0 / (1.0 + (-z).exp());
                let label = u8::from(self.rng.random::<f64>() < p);
                Instance {
                    id: i,
                    values: self.columns.iter().map(|c| c[i].clone()).collect(),
                    label,
                }
            })
            .collect();
        Dataset {
            schema: self.schema,
            label_column: label_column.into(),
            label_values: [label_values[0].into(), label_values[1].into()],
            rows,
            split_tags: Vec::new(),
            seed: None,
        }
    }
}

/// Generate the synthetic table for `domain`.
pub fn generate(domain: Domain, seed: u64) -> Dataset {
    let n = domain.n_rows();
    let mut b = Builder::new(seed, n);
    match domain {
        Domain::Heart => {
            b.int_normal("age", 54.0, 9.0, 29.0, 77.0, 0.6);
            b.categorical("sex", &[("male", 0.68, 0.8), ("female", 0.32, 0.0)]);
            b.categorical(
                "cp",
                &[
                    ("typical", 0.08, -0.8),
                    ("atypical", 0.17, -0.6),
                    ("non_anginal", 0.28, -0.4),
                    ("asymptomatic", 0.47, 0.9),
                ],
            );
            b.int_normal("trestbps", 131.0, 17.0, 90.0, 200.0, 0.3);
            b.int_normal("chol", 246.0, 51.0, 120.0, 560.0, 0.25);
            b.categorical("fbs", &[("false", 0.85, 0.0), ("true", 0.15, 0.1)]);
            b.categorical("restecg", &[("normal", 0.5, 0.0), ("st_t", 0.02, 0.0), ("lvh", 0.48, 0.0)]);
            b.int_normal("thalach", 150.0, 23.0, 70.0, 202.0, -0.7);
            b.categorical("exang", &[("no", 0.67, 0.0), ("yes", 0.33, 0.7)]);
            let oldpeak: Vec<f64> = (0..n)
                .map(|_| (b.normal(1.0, 1.1).max(0.0) * 10.0).round() / 10.0)
                .collect();
            b.push_numeric("oldpeak", &oldpeak, 0.6, 1.0, 1.1);
            b.categorical("slope", &[("up", 0.46, -0.4), ("flat", 0.46, 0.3), ("down", 0.08, 0.4)]);
            let ca_levels = [(0.0, 0.58), (1.0, 0.22), (2.0, 0.13), (3.0, 0.07)];
            let ca: Vec<f64> = (0..n)
                .map(|_| {
                    let mut u = b.rng.random::<f64>();
                    for (v, p) in ca_levels {
                        if u < p {
                            return v;
                        }
                        u -= p;
                    }
                    3.0
                })
                .collect();
            b.push_numeric("ca", &ca, 0.7, 0.7, 0.9);
            b.finish(domain, "target", ["0", "1"])
        }
        Domain::Fico => {
            b.int_normal("ExternalRiskEstimate", 72.0, 10.0, 33.0, 94.0, -1.2);
            b.int_normal("MSinceOldestTradeOpen", 200.0, 95.0, 2.0, 800.0, -0.3);
            b.int_normal("MSinceMostRecentTradeOpen", 9.0, 12.0, 0.0, 200.0, 0.0);
            b.int_normal("AverageMInFile", 78.0, 33.0, 4.0, 380.0, -0.3);
            b.int_normal("NumSatisfactoryTrades", 18.0, 11.0, 0.0, 80.0, -0.25);
            b.int_normal("NumTrades60Ever2DerogPubRec", 0.0, 1.2, 0.0, 19.0, 0.2);
            b.int_normal("PercentTradesNeverDelq", 92.0, 9.0, 0.0, 100.0, -0.4);
            b.categorical(
                "MaxDelq2PublicRecLast12M",
                &[
                    ("current", 0.55, -0.3),
                    ("unknown", 0.2, 0.0),
                    ("30_days", 0.13, 0.3),
                    ("60_days", 0.07, 0.5),
                    ("derogatory", 0.05, 0.8),
                ],
            );
            b.int_normal("NumInqLast6M", 1.0, 2.3, 0.0, 66.0, 0.4);
            b.int_normal("NetFractionRevolvingBurden", 35.0, 29.0, 0.0, 150.0, 0.5);
            b.int_normal("PercentInstallTrades", 33.0, 18.0, 0.0, 100.0, 0.1);
            b.int_normal("NumBank2NatlTradesWHighUtilization", 1.0, 1.5, 0.0, 18.0, 0.25);
            b.finish(domain, "RiskPerformance", ["Good", "Bad"])
        }
        Domain::Hr => {
            let age = b.int_normal("Age", 37.0, 9.0, 18.0, 60.0, -0.6);
            b.categorical("Gender", &[("Male", 0.6, 0.1), ("Female", 0.4, 0.0)]);
            let income: Vec<f64> = (0..n)
                .map(|i| {
                    let base = b.normal(8.3, 0.5) + 0.02 * (age[i] - 37.0);
                    base.exp().round().clamp(1000.0, 20000.0)
                })
                .collect();
            let log_income: Vec<f64> = income.iter().map(|v| v.ln()).collect();
            for (s, v) in b.score.iter_mut().zip(&log_income) {
                *s += -0.5 * (v - 8.3) / 0.55;
            }
            b.schema.push(FeatureSpec {
                name: "MonthlyIncome".into(),
                kind: FeatureKind::Numeric,
            });
            b.columns.push(income.iter().map(|&v| Value::Num(v)).collect());
            b.categorical("OverTime", &[("No", 0.72, 0.0), ("Yes", 0.28, 1.0)]);
            b.int_normal("JobSatisfaction", 2.7, 1.1, 1.0, 4.0, -0.35);
            b.int_normal("EnvironmentSatisfaction", 2.7, 1.1, 1.0, 4.0, -0.3);
            b.int_normal("YearsAtCompany", 7.0, 6.0, 0.0, 40.0, -0.4);
            b.int_normal("DistanceFromHome", 9.0, 8.0, 1.0, 29.0, 0.25);
            b.categorical(
                "MaritalStatus",
                &[("Single", 0.32, 0.6), ("Married", 0.46, 0.0), ("Divorced", 0.22, -0.3)],
            );
            b.int_normal("JobLevel", 2.0, 1.1, 1.0, 5.0, -0.3);
            b.int_normal("TotalWorkingYears", 11.0, 7.0, 0.0, 40.0, -0.3);
            b.categorical(
                "BusinessTravel",
                &[("Non-Travel", 0.1, -0.4), ("Travel_Rarely", 0.71, 0.0), ("Travel_Frequently", 0.19, 0.5)],
            );
            b.categorical(
                "Department",
                &[("Research & Development", 0.65, 0.0), ("Sales", 0.3, 0.3), ("Human Resources", 0.05, 0.2)],
            );
            b.finish(domain, "Attrition", ["No", "Yes"])
        }
    }
}

/// Write a dataset as a headed CSV with the label in the last column.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = dataset.schema.iter().map(|f| f.name.as_str()).collect();
    header.push(&dataset.label_column);
    w.write_record(&header)?;
    for row in &dataset.rows {
        let mut rec: Vec<String> = row.values.iter().map(Value::to_string).collect();
        rec.push(dataset.label_values[row.label as usize].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Path of a bundled CSV inside this crate.
pub fn bundled_path(domain: Domain) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(domain.file_name())
}

/// Load a bundled CSV and apply its standard split.
pub fn load_bundled(domain: Domain) -> Result<Dataset, DataError> {
    let d = super::load_csv(&bundled_path(domain), &domain.load_options())?;
    d.split(domain.split_counts(), domain.split_seed())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate(Domain::Heart, 5);
        let b = generate(Domain::Heart, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 719);
    }

    #[test]
    fn csv_round_trip() {
        let d = generate(Domain::Hr, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hr.csv");
        write_csv(&d, &p).unwrap();
        let back = super::super::load_csv(&p, &Domain::Hr.load_options()).unwrap();
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.schema, d.schema);
        assert_eq!(back.rows[3].values, d.rows[3].values);
    }
}
