use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cover_bits, AdvisingRule, Rule, RuleError, Side};
use crate::data::BinarizedView;
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub min_len: usize,
    pub max_len: usize,
    /// Minimum fraction of the mining rows a candidate must cover.
    pub min_support: f64,
    pub forest_size: usize,
    /// Conditions sampled per split; `None` uses the square root of the catalog size.
    pub conditions_per_split: Option<usize>,
    pub max_per_side: usize,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_len: 2,
            max_len: 4,
            min_support: 0.05,
            forest_size: 100,
            conditions_per_split: None,
            max_per_side: 5000,
            seed: 0,
        }
    }
}

/// A candidate rule with its coverage over the mining rows.
#[derive(Debug, Clone)]
pub struct CandidateRule {
    /// Sorted catalog indices.
    pub conditions: Vec<usize>,
    pub rule: Rule,
    /// Coverage over `CandidatePool::rows` positions.
    pub cover: FixedBitSet,
    /// Precision for the label of the side the candidate belongs to.
    pub precision: f64,
    pub support: f64,
}

impl CandidateRule {
    pub fn to_advising(&self) -> AdvisingRule {
        AdvisingRule {
            rule: self.rule.clone(),
            precision: self.precision,
            support: self.support,
        }
    }
}

/// Positive (advise 1) and negative (advise 0) candidates.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    /// Dataset rows the coverage bitsets are indexed by.
    pub rows: Vec<usize>,
    pub positive: Vec<CandidateRule>,
    pub negative: Vec<CandidateRule>,
}

impl CandidatePool {
    pub fn side(&self, side: Side) -> &[CandidateRule] {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Score explicit condition conjunctions over `rows` and assign each to the
    /// side of its majority label. Exact ties and uncovered conjunctions are dropped.
    pub fn from_conjunctions(
        view: &BinarizedView,
        rows: &[usize],
        labels: &[u8],
        conjunctions: impl IntoIterator<Item = Vec<usize>>,
        min_support: f64,
    ) -> Result<CandidatePool, RuleError> {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        let n = rows.len() as f64;
        for mut conds in conjunctions {
            conds.sort_unstable();
            conds.dedup();
            let cover = cover_bits(view, &conds, rows);
            let covered = cover.count_ones(..);
            if covered == 0 || (covered as f64) < min_support * n {
                continue;
            }
            let pos = cover.ones().filter(|&p| labels[rows[p]] == 1).count();
            let frac = pos as f64 / covered as f64;
            let (side, precision) = if frac > 0.5 {
                (Side::Positive, frac)
            } else if frac < 0.5 {
                (Side::Negative, 1.0 - frac)
            } else {
                continue;
            };
            let rule = Rule::new(conds.iter().map(|&c| view.catalog[c].clone()).collect())?;
            let cand = CandidateRule {
                conditions: conds,
                rule,
                cover,
                precision,
                support: covered as f64 / n,
            };
            match side {
                Side::Positive => positive.push(cand),
                Side::Negative => negative.push(cand),
            }
        }
        Ok(CandidatePool {
            rows: rows.to_vec(),
            positive,
            negative,
        })
    }
}

/// Mine candidate rules as root-to-node paths of a random forest grown on the
/// binarized `rows`, keeping paths of length `min_len..=max_len` whose support
/// reaches `min_support`. Each side is capped at `max_per_side` by precision.
pub fn mine_candidates(
    view: &BinarizedView,
    rows: &[usize],
    labels: &[u8],
    config: &MiningConfig,
) -> Result<CandidatePool, RuleError> {
    if config.max_len < 1 || config.min_len > config.max_len {
        return Err(RuleError::InvalidParameter(format!(
            "rule length range {}..={}",
            config.min_len, config.max_len
        )));
    }
    if !(config.min_support > 0.0 && config.min_support < 1.0) {
        return Err(RuleError::InvalidParameter(format!("min_support {}", config.min_support)));
    }
    if rows.is_empty() || view.n_conditions() == 0 {
        return Err(RuleError::EmptyPool);
    }

    let per_tree: Vec<Vec<Vec<usize>>> = (0..config.forest_size)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::rng(seeding::derive(config.seed, t as u64));
            grow_tree(view, rows, labels, config, &mut rng)
        })
        .collect();

    // merge in tree order so the result does not depend on scheduling
    let mut seen = BTreeSet::new();
    let mut unique = Vec::new();
    for paths in per_tree {
        for mut p in paths {
            p.sort_unstable();
            if p.len() >= config.min_len && p.len() <= config.max_len && seen.insert(p.clone()) {
                unique.push(p);
            }
        }
    }

    let mut pool = CandidatePool::from_conjunctions(view, rows, labels, unique, config.min_support)?;
    for side in [&mut pool.positive, &mut pool.negative] {
        side.sort_by(|a, b| {
            b.precision
                .total_cmp(&a.precision)
                .then(b.support.total_cmp(&a.support))
                .then(a.conditions.cmp(&b.conditions))
        });
        side.truncate(config.max_per_side);
    }
    if pool.is_empty() {
        return Err(RuleError::EmptyPool);
    }
    Ok(pool)
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Grow one depth-limited tree on a bootstrap sample; returns every root-to-node path.
fn grow_tree(
    view: &BinarizedView,
    rows: &[usize],
    labels: &[u8],
    config: &MiningConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let sample: Vec<usize> = (0..rows.len()).map(|_| rows[rng.random_range(0..rows.len())]).collect();
    let n_cond = view.n_conditions();
    let per_split = config
        .conditions_per_split
        .unwrap_or_else(|| (n_cond as f64).sqrt().ceil() as usize)
        .clamp(1, n_cond);
    // children smaller than this cannot reach the support threshold
    let min_child = ((config.min_support * rows.len() as f64).ceil() as usize).max(1);
    let all: Vec<usize> = (0..n_cond).collect();

    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec<usize>)> = vec![(sample, Vec::new())];
    while let Some((node_rows, path)) = stack.pop() {
        if path.len() >= config.max_len {
            continue;
        }
        let n = node_rows.len();
        let pos = node_rows.iter().filter(|&&r| labels[r] == 1).count();
        if pos == 0 || pos == n {
            continue;
        }
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize)> = None;
        let mut candidates: Vec<usize> = all.choose_multiple(rng, per_split).copied().collect();
        candidates.shuffle(rng);
        for c in candidates {
            let (mut nt, mut pt) = (0usize, 0usize);
            for &r in &node_rows {
                if view.holds(r, c) {
                    nt += 1;
                    pt += usize::from(labels[r] == 1);
                }
            }
            let nf = n - nt;
            if nt < min_child || nf < min_child {
                continue;
            }
            let child = (nt as f64 * gini(pt, nt) + nf as f64 * gini(pos - pt, nf)) / n as f64;
            let gain = parent - child;
            if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, c));
            }
        }
        let Some((_, c)) = best else { continue };
        let comp = view.complement[c];
        let (t_rows, f_rows): (Vec<usize>, Vec<usize>) = node_rows.iter().partition(|&&r| view.holds(r, c));
        let mut t_path = path.clone();
        t_path.push(c);
        let mut f_path = path;
        f_path.push(comp);
        out.push(t_path.clone());
        out.push(f_path.clone());
        stack.push((f_rows, f_path));
        stack.push((t_rows, t_path));
    }
    out
}
