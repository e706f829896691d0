//! Conjunctive rules, two-sided rule sets, and candidate mining.

mod mining;

use std::fmt;
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::data::Condition;
use crate::data::{BinarizedView, Dataset, Value};
pub use mining::{mine_candidates, CandidatePool, CandidateRule, MiningConfig};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("a rule needs at least one condition")]
    EmptyRule,
    #[error("condition `{0}` does not match the instance schema")]
    SchemaMismatch(String),
    #[error("rule covers no training instance")]
    ZeroCoverage,
    #[error("no candidate rule satisfies the length and support constraints")]
    EmptyPool,
    #[error("invalid mining parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A conjunction of conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleRepr", into = "RuleRepr")]
pub struct Rule {
    conditions: Vec<Condition>,
}

#[derive(Serialize, Deserialize)]
struct RuleRepr {
    conditions: Vec<Condition>,
}

impl TryFrom<RuleRepr> for Rule {
    type Error = RuleError;
    fn try_from(r: RuleRepr) -> Result<Self, Self::Error> {
        Rule::new(r.conditions)
    }
}

impl From<Rule> for RuleRepr {
    fn from(r: Rule) -> Self {
        RuleRepr {
            conditions: r.conditions,
        }
    }
}

impl Rule {
    pub fn new(conditions: Vec<Condition>) -> Result<Self, RuleError> {
        if conditions.is_empty() {
            return Err(RuleError::EmptyRule);
        }
        Ok(Self { conditions })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// True iff every condition holds on `values`.
    pub fn covers(&self, values: &[Value]) -> Result<bool, RuleError> {
        for c in &self.conditions {
            match c.eval_row(values) {
                Some(true) => {}
                Some(false) => return Ok(false),
                None => return Err(RuleError::SchemaMismatch(c.to_string())),
            }
        }
        Ok(true)
    }

    /// Fraction of covered `rows` whose label equals `target`.
    pub fn precision(&self, dataset: &Dataset, rows: &[usize], target: u8) -> Result<f64, RuleError> {
        let mut covered = 0usize;
        let mut hits = 0usize;
        for &r in rows {
            let row = &dataset.rows[r];
            if self.covers(&row.values)? {
                covered += 1;
                hits += usize::from(row.label == target);
            }
        }
        if covered == 0 {
            return Err(RuleError::ZeroCoverage);
        }
        Ok(hits as f64 / covered as f64)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A rule as deployed in an advisor: its train precision is the confidence it reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisingRule {
    #[serde(flatten)]
    pub rule: Rule,
    pub precision: f64,
    pub support: f64,
}

/// Which side of a rule set a rule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn label(self) -> u8 {
        match self {
            Side::Positive => 1,
            Side::Negative => 0,
        }
    }

    pub fn for_label(y: u8) -> Side {
        if y == 1 {
            Side::Positive
        } else {
            Side::Negative
        }
    }
}

/// Identifies one rule inside a [`RuleSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleRef {
    pub side: Side,
    pub index: usize,
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Positive => "pos",
            Side::Negative => "neg",
        };
        write!(f, "{s}:{}", self.index)
    }
}

/// Rules that advise 1 (`positive`) and rules that advise 0 (`negative`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub positive: Vec<AdvisingRule>,
    pub negative: Vec<AdvisingRule>,
}

impl RuleSet {
    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn side(&self, side: Side) -> &[AdvisingRule] {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    /// Whether any rule on `side` covers the instance.
    pub fn covers(&self, side: Side, values: &[Value]) -> Result<bool, RuleError> {
        for r in self.side(side) {
            if r.rule.covers(values)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Highest-precision covering rule on `side`; ties keep the earliest rule.
    pub fn best_covering(&self, side: Side, values: &[Value]) -> Result<Option<(f64, RuleRef)>, RuleError> {
        let mut best: Option<(f64, RuleRef)> = None;
        for (index, r) in self.side(side).iter().enumerate() {
            if r.rule.covers(values)? && best.is_none_or(|(p, _)| r.precision > p) {
                best = Some((r.precision, RuleRef { side, index }));
            }
        }
        Ok(best)
    }

    pub fn get(&self, r: RuleRef) -> Option<&AdvisingRule> {
        self.side(r.side).get(r.index)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), RuleError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<RuleSet, RuleError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (side, name) in [(Side::Positive, "advise 1"), (Side::Negative, "advise 0")] {
            for r in self.side(side) {
                writeln!(f, "IF {} THEN {name}  (precision {:.3})", r.rule, r.precision)?;
            }
        }
        Ok(())
    }
}

/// Coverage bitset of a conjunction of catalog conditions over the given view rows.
pub fn cover_bits(view: &BinarizedView, conditions: &[usize], rows: &[usize]) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(rows.len());
    for (pos, &r) in rows.iter().enumerate() {
        if conditions.iter().all(|&c| view.holds(r, c)) {
            bits.insert(pos);
        }
    }
    bits
}
