//! Simulated annealing over two-sided rule sets, minimizing the empirical
//! total team loss of a simulated human advised by the rule set.

mod variant;

use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use variant::{apply_variant, Variant, VariantOverrides};
use crate::advisor::{
    decision_loss, expected_team_loss, select_advice, Advisor, AdvisorError, AdvisorMode, CostSpec,
};
use crate::data::Dataset;
use crate::estimators::{DiscretionModel, EstimatorError, TabularModel};
use crate::humansim::{Case, HumanProfile, SimError};
use crate::rules::{CandidatePool, MiningConfig, RuleError, RuleRef, RuleSet, Side};
use crate::seeding;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("training panel does not line up with the candidate pool: {0}")]
    PanelMismatch(String),
    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(String),
    #[error("team-rules training needs an outcome model")]
    MissingOutcomeModel,
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub iterations: usize,
    /// Temperature at iteration t is `cooling^(t / iterations)`.
    pub cooling: f64,
    /// Listed among the original hyperparameters; recorded but unused.
    pub beta0: f64,
    pub min_rule_len: usize,
    pub max_rule_len: usize,
    /// Minimum fraction of training instances a candidate rule must cover.
    pub min_support: f64,
    pub forest_size: usize,
    pub max_candidates_per_side: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Stop once no instance carries correctable loss.
    pub early_stop: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            cooling: 0.01,
            beta0: 0.05,
            min_rule_len: 2,
            max_rule_len: 4,
            min_support: 0.05,
            forest_size: 100,
            max_candidates_per_side: 5000,
            variant: Variant::Tr,
            seed: 0,
            early_stop: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.iterations == 0 {
            return Err(TrainError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(TrainError::InvalidConfig(format!("cooling = {}", self.cooling)));
        }
        Ok(())
    }

    pub fn mining(&self) -> MiningConfig {
        MiningConfig {
            min_len: self.min_rule_len,
            max_len: self.max_rule_len,
            min_support: self.min_support,
            forest_size: self.forest_size,
            conditions_per_split: None,
            max_per_side: self.max_candidates_per_side,
            seed: seeding::derive_str(self.seed, "mining"),
        }
    }

    /// `cooling^(t / iterations)`.
    pub fn temperature(&self, t: usize) -> f64 {
        self.cooling.powf(t as f64 / self.iterations as f64)
    }
}

/// Training instances with the human's independent judgments and the outcome model's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPanel {
    pub rows: Vec<usize>,
    pub y: Vec<u8>,
    pub h: Vec<u8>,
    pub c_h: Vec<f64>,
    /// `p(y = 1 | x)` from the outcome model.
    pub p1: Vec<f64>,
}

impl TrainingPanel {
    /// Draw the human's decisions on `rows`. `difficulty` and `p1` are indexed by dataset row.
    pub fn simulate<R: Rng + ?Sized>(
        profile: &HumanProfile,
        dataset: &Dataset,
        rows: &[usize],
        difficulty: &[f64],
        p1: &[f64],
        rng: &mut R,
    ) -> Result<TrainingPanel, SimError> {
        let mut panel = TrainingPanel {
            rows: rows.to_vec(),
            y: Vec::with_capacity(rows.len()),
            h: Vec::with_capacity(rows.len()),
            c_h: Vec::with_capacity(rows.len()),
            p1: Vec::with_capacity(rows.len()),
        };
        for &r in rows {
            let d = profile.simulate(&Case::from_dataset(dataset, r, difficulty[r]), rng)?;
            panel.y.push(dataset.rows[r].label);
            panel.h.push(d.h);
            panel.c_h.push(d.c_h);
            panel.p1.push(p1[r]);
        }
        Ok(panel)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Human decision loss summed over the panel.
    pub fn human_loss(&self, costs: &CostSpec) -> f64 {
        self.y.iter().zip(&self.h).map(|(&y, &h)| decision_loss(costs, y, h)).sum()
    }
}

/// What the annealer optimizes.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Expected team loss under selective advising.
    Team { costs: CostSpec, discretion: DiscretionModel },
    /// Decision loss of always-on advice from the positive rules.
    TaskOnly { costs: CostSpec },
}

impl Objective {
    pub fn costs(&self) -> &CostSpec {
        match self {
            Objective::Team { costs, .. } | Objective::TaskOnly { costs } => costs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Add,
    Cut,
    Replace,
    /// No eligible candidate; the rule set is unchanged.
    None,
}

impl EditKind {
    fn name(self) -> &'static str {
        match self {
            EditKind::Add => "add",
            EditKind::Cut => "cut",
            EditKind::Replace => "replace",
            EditKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub ttl_current: f64,
    pub ttl_best: f64,
    pub edit_kind: EditKind,
    pub accepted: bool,
}

pub fn write_trace(trace: &[TraceRow], path: &Path) -> Result<(), TrainError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "t,ttl_current,ttl_best,edit_kind,accepted")?;
    for r in trace {
        writeln!(f, "{},{},{},{},{}", r.t, r.ttl_current, r.ttl_best, r.edit_kind.name(), r.accepted)?;
    }
    f.flush()?;
    Ok(())
}

/// Candidate indices selected on each side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

impl Selection {
    pub fn side(&self, side: Side) -> &Vec<usize> {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut Vec<usize> {
        match side {
            Side::Positive => &mut self.positive,
            Side::Negative => &mut self.negative,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    /// Rule set made of the selected candidates, in candidate order.
    pub fn to_rule_set(&self, pool: &CandidatePool) -> RuleSet {
        let build = |side: Side| {
            let mut idx = self.side(side).clone();
            idx.sort_unstable();
            idx.iter().map(|&i| pool.side(side)[i].to_advising()).collect()
        };
        RuleSet {
            positive: build(Side::Positive),
            negative: build(Side::Negative),
        }
    }
}

/// Per-instance result of applying a rule set to the panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceOutcome {
    /// Recommendation as seen downstream (the human's decision when withheld).
    pub yhat: u8,
    pub offered: bool,
    pub covered: bool,
    pub p_accept: Option<f64>,
    pub loss: f64,
}

/// Scores rule sets on a fixed panel, caching discretion-model queries.
pub struct Scorer<'a> {
    panel: &'a TrainingPanel,
    pool: &'a CandidatePool,
    objective: &'a Objective,
    cache: HashMap<(u64, u64), f64>,
    best_pos: Vec<f64>,
    best_neg: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub fn new(panel: &'a TrainingPanel, pool: &'a CandidatePool, objective: &'a Objective) -> Result<Self, TrainError> {
        if panel.rows != pool.rows {
            return Err(TrainError::PanelMismatch(format!(
                "{} panel rows vs {} pool rows",
                panel.len(),
                pool.rows.len()
            )));
        }
        let n = panel.len();
        Ok(Scorer {
            panel,
            pool,
            objective,
            cache: HashMap::new(),
            best_pos: vec![f64::NAN; n],
            best_neg: vec![f64::NAN; n],
        })
    }

    fn fill_best(&mut self, sel: &Selection) {
        self.best_pos.fill(f64::NAN);
        self.best_neg.fill(f64::NAN);
        for (side, best) in [(Side::Positive, &mut self.best_pos), (Side::Negative, &mut self.best_neg)] {
            for &c in sel.side(side) {
                let cand = &self.pool.side(side)[c];
                for i in cand.cover.ones() {
                    if best[i].is_nan() || cand.precision > best[i] {
                        best[i] = cand.precision;
                    }
                }
            }
        }
    }

    /// Outcome of every panel instance under `sel`, plus the summed loss.
    pub fn score(&mut self, sel: &Selection) -> (Vec<InstanceOutcome>, f64) {
        self.fill_best(sel);
        let p = self.panel;
        let mut out = Vec::with_capacity(p.len());
        let mut total = 0.0;
        for i in 0..p.len() {
            let pos = (!self.best_pos[i].is_nan()).then_some(self.best_pos[i]);
            let neg = (!self.best_neg[i].is_nan()).then_some(self.best_neg[i]);
            let o = match self.objective {
                Objective::TaskOnly { costs } => {
                    let yhat = u8::from(pos.is_some());
                    InstanceOutcome {
                        yhat,
                        offered: true,
                        covered: pos.is_some(),
                        p_accept: None,
                        loss: decision_loss(costs, p.y[i], yhat),
                    }
                }
                Objective::Team { costs, discretion } => {
                    let r = |side| RuleRef { side, index: 0 };
                    let cache = &mut self.cache;
                    let advice = select_advice(
                        costs,
                        p.p1[i],
                        p.h[i],
                        p.c_h[i],
                        pos.map(|c| (c, r(Side::Positive))),
                        neg.map(|c| (c, r(Side::Negative))),
                        |m, h| *cache.entry((m.to_bits(), h.to_bits())).or_insert_with(|| discretion.predict(m, h)),
                    );
                    let yhat = advice.effective(p.h[i]);
                    let pa = advice.p_accept.unwrap_or(0.0);
                    InstanceOutcome {
                        yhat,
                        offered: advice.offered,
                        covered: pos.is_some() || neg.is_some(),
                        p_accept: advice.p_accept,
                        loss: expected_team_loss(costs, p.y[i], yhat, p.h[i], pa),
                    }
                }
            };
            total += o.loss;
            out.push(o);
        }
        (out, total)
    }

    /// Loss contribution used to pick the instance to fix: the advising cost
    /// is dropped where the expected decision gain of the advice exceeds it.
    pub fn sampling_weight(&self, i: usize, o: &InstanceOutcome) -> f64 {
        let costs = self.objective.costs();
        let y = self.panel.y[i];
        let mut w = o.loss;
        if let (true, Some(pa)) = (o.offered, o.p_accept) {
            if decision_loss(costs, y, 1 - y) * pa > costs.alpha {
                w -= costs.alpha;
            }
        }
        w.max(0.0)
    }
}

/// Empirical team loss of an assembled advisor on a panel, using the
/// advisor's own inference path (an independent check on the annealer's bookkeeping).
pub fn empirical_ttl(advisor: &Advisor, dataset: &Dataset, panel: &TrainingPanel) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for i in 0..panel.len() {
        let values = &dataset.rows[panel.rows[i]].values;
        let advice = advisor.advise(values, panel.h[i], panel.c_h[i])?;
        let yhat = advice.effective(panel.h[i]);
        total += match advisor.mode {
            AdvisorMode::TaskOnly => decision_loss(&advisor.costs, panel.y[i], yhat),
            AdvisorMode::TeamRules => {
                expected_team_loss(&advisor.costs, panel.y[i], yhat, panel.h[i], advice.p_accept.unwrap_or(0.0))
            }
        };
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub advisor: Advisor,
    pub selection: Selection,
    pub trace: Vec<TraceRow>,
    /// Summed training loss of the returned rule set.
    pub best_ttl: f64,
    /// Summed training loss of the empty rule set.
    pub empty_ttl: f64,
    pub iterations_run: usize,
    pub stopped_early: bool,
}

/// Draw an index with probability proportional to its weight; `None` when all weights are zero.
pub fn sample_error_instance<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
        last = Some(i);
    }
    last
}

/// Revert test applied after every proposal: go back to the previous rule set
/// when `exp((old - new) / temperature) <= u`. Improvements and ties are always kept.
pub fn should_revert(delta: f64, temperature: f64, u: f64) -> bool {
    (delta / temperature).exp() <= u
}

struct Proposal {
    selection: Selection,
    kind: EditKind,
}

fn covering(pool: &CandidatePool, side: Side, candidates: &[usize], pos: usize) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&c| pool.side(side)[c].cover.contains(pos))
        .collect()
}

fn add_rule(pool: &CandidatePool, sel: &Selection, side: Side, pos: usize, rng: &mut ChaCha8Rng) -> Option<Selection> {
    let chosen = sel.side(side);
    let eligible: Vec<usize> = (0..pool.side(side).len())
        .filter(|c| !chosen.contains(c) && pool.side(side)[*c].cover.contains(pos))
        .collect();
    let &c = eligible.choose(rng)?;
    let mut next = sel.clone();
    next.side_mut(side).push(c);
    Some(next)
}

/// One structural edit guided by instance `eps`.
fn propose(
    pool: &CandidatePool,
    panel: &TrainingPanel,
    objective: &Objective,
    sel: &Selection,
    eps: usize,
    o: &InstanceOutcome,
    rng: &mut ChaCha8Rng,
) -> Proposal {
    let y = panel.y[eps];
    let low_acceptance = matches!(objective, Objective::Team { .. })
        && o.yhat != panel.h[eps]
        && o.p_accept.is_some_and(|pa| pa < objective.costs().alpha);
    if (o.covered && o.yhat != y) || low_acceptance {
        let side = if y == 0 { Side::Positive } else { Side::Negative };
        let cover = covering(pool, side, sel.side(side), eps);
        if let Some(&victim) = cover.choose(rng) {
            let mut next = sel.clone();
            next.side_mut(side).retain(|&c| c != victim);
            if rng.random::<bool>() {
                let spare: Vec<usize> = (0..pool.side(side).len())
                    .filter(|c| !sel.side(side).contains(c) && !pool.side(side)[*c].cover.contains(eps))
                    .collect();
                if let Some(&c) = spare.choose(rng) {
                    next.side_mut(side).push(c);
                    return Proposal {
                        selection: next,
                        kind: EditKind::Replace,
                    };
                }
            }
            return Proposal {
                selection: next,
                kind: EditKind::Cut,
            };
        }
        // nothing on that side covers the instance: try strengthening the other side instead
    }
    let side = Side::for_label(y);
    if matches!(objective, Objective::TaskOnly { .. }) && side == Side::Negative {
        return Proposal {
            selection: sel.clone(),
            kind: EditKind::None,
        };
    }
    match add_rule(pool, sel, side, eps, rng) {
        Some(next) => Proposal {
            selection: next,
            kind: EditKind::Add,
        },
        None => Proposal {
            selection: sel.clone(),
            kind: EditKind::None,
        },
    }
}

/// Run the annealer and assemble the advisor from the best rule set found.
pub fn anneal(
    config: &TrainerConfig,
    panel: &TrainingPanel,
    pool: &CandidatePool,
    objective: &Objective,
    outcome: Option<&TabularModel>,
) -> Result<TrainResult, TrainError> {
    config.validate()?;
    if pool.is_empty() {
        return Err(TrainError::EmptyPool);
    }
    let mut scorer = Scorer::new(panel, pool, objective)?;
    let mut rng = seeding::rng(seeding::derive_str(config.seed, "anneal"));

    let mut current = Selection::default();
    let (mut outcomes, mut current_ttl) = scorer.score(&current);
    let empty_ttl = current_ttl;
    let mut best = current.clone();
    let mut best_ttl = current_ttl;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut stopped_early = false;
    let mut iterations_run = 0;

    for t in 1..=config.iterations {
        let weights: Vec<f64> = outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| scorer.sampling_weight(i, o))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            if config.early_stop {
                stopped_early = true;
                break;
            }
            trace.push(TraceRow {
                t,
                ttl_current: current_ttl,
                ttl_best: best_ttl,
                edit_kind: EditKind::None,
                accepted: false,
            });
            iterations_run = t;
            continue;
        }
        let eps = sample_error_instance(&weights, &mut rng).expect("positive total weight");

        let proposal = propose(pool, panel, objective, &current, eps, &outcomes[eps], &mut rng);
        let (new_outcomes, new_ttl) = scorer.score(&proposal.selection);
        if new_ttl < best_ttl {
            best = proposal.selection.clone();
            best_ttl = new_ttl;
        }
        let delta = current_ttl - new_ttl;
        let revert = should_revert(delta, config.temperature(t), rng.random::<f64>());
        if !revert {
            current = proposal.selection;
            current_ttl = new_ttl;
            outcomes = new_outcomes;
        }
        trace.push(TraceRow {
            t,
            ttl_current: current_ttl,
            ttl_best: best_ttl,
            edit_kind: proposal.kind,
            accepted: !revert,
        });
        iterations_run = t;
    }
    if stopped_early {
        log::info!("annealing stopped at iteration {}: no correctable loss left", iterations_run + 1);
    }

    let rule_set = best.to_rule_set(pool);
    let advisor = match objective {
        Objective::Team { costs, discretion } => Advisor {
            rule_set,
            discretion: discretion.clone(),
            outcome: Some(outcome.ok_or(TrainError::MissingOutcomeModel)?.clone()),
            costs: *costs,
            mode: AdvisorMode::TeamRules,
            negative_precision: 0.0,
        },
        Objective::TaskOnly { costs } => {
            let (outs, _) = scorer.score(&best);
            let uncovered: Vec<usize> = (0..panel.len()).filter(|&i| outs[i].yhat == 0).collect();
            let base: Vec<usize> = if uncovered.is_empty() { (0..panel.len()).collect() } else { uncovered };
            let negative_precision =
                base.iter().filter(|&&i| panel.y[i] == 0).count() as f64 / base.len().max(1) as f64;
            Advisor {
                rule_set,
                discretion: DiscretionModel::fixed(1.0),
                outcome: outcome.cloned(),
                costs: *costs,
                mode: AdvisorMode::TaskOnly,
                negative_precision,
            }
        }
    };
    Ok(TrainResult {
        advisor,
        selection: best,
        trace,
        best_ttl,
        empty_ttl,
        iterations_run,
        stopped_early,
    })
}

/// Train one variant: applies the variant's overrides to the context costs and
/// learned discretion model, then anneals.
pub fn train_variant(
    config: &TrainerConfig,
    panel: &TrainingPanel,
    pool: &CandidatePool,
    context: &CostSpec,
    discretion: &DiscretionModel,
    outcome: Option<&TabularModel>,
) -> Result<TrainResult, TrainError> {
    let o = apply_variant(config.variant, context);
    let objective = match o.mode {
        AdvisorMode::TaskOnly => Objective::TaskOnly { costs: o.training_costs },
        AdvisorMode::TeamRules => Objective::Team {
            costs: o.training_costs,
            discretion: match o.discretion_fixed {
                Some(v) => discretion.with_fixed_value(v),
                None => discretion.clone(),
            },
        },
    };
    anneal(config, panel, pool, &objective, outcome)
}

#[cfg(test)]
mod tests;
