//! Team-loss metrics over repeated simulated humans, the validation gate,
//! acceptance-noise studies, and alpha sweeps.

mod noise;
mod sweep;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use noise::{acceptance_auc, degrade_adb, degradation_study, NoisePoint};
pub use sweep::{advising_rate_curve, run_grid, CurvePoint, SweepPoint, SweepResult};
use crate::advisor::{decision_loss, Advisor, AdvisorError, CostSpec};
use crate::data::Dataset;
use crate::humansim::{Case, Direction, Group, HumanProfile, SimError};
use crate::seeding;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation setup: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSpec {
    pub repetitions: usize,
    /// Subpopulations reported next to the overall metrics.
    pub groups: Vec<Group>,
    pub seed: u64,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            repetitions: 50,
            groups: Vec::new(),
            seed: 0,
        }
    }
}

/// Mean and standard error over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len();
        if n == 0 {
            return Stat { mean: f64::NAN, se: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        Stat { mean, se: standard_error(xs, mean) }
    }

    fn optional(xs: &[Option<f64>]) -> Option<Stat> {
        let defined: Vec<f64> = xs.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| Stat::of(&defined))
    }
}

fn standard_error(xs: &[f64], mean: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Metrics for one population. Losses are per instance; rates are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_instances: usize,
    /// Loss of the human's independent decisions.
    pub hdl: Stat,
    /// Loss of the final decisions.
    pub tdl: Stat,
    /// Advising cost paid for contradicting advice.
    pub al: Stat,
    /// `tdl + al`.
    pub ttl: Stat,
    /// `hdl - ttl`.
    pub value_added: Stat,
    /// Final accuracy minus the human's independent accuracy.
    pub accuracy_improvement: Stat,
    /// Total advising cost over the population (loss units).
    pub advising_costs_incurred: Stat,
    /// `alpha * advising_rate`.
    pub advising_costs_au: Stat,
    /// Fraction of instances that received contradicting advice.
    pub advising_rate: Stat,
    pub advising_confidence_mean: Option<Stat>,
    /// Fraction of contradicting advice that matched the true label.
    pub advising_accuracy: Option<Stat>,
    pub acceptance_rate: Option<Stat>,
    /// Fraction of the human's wrong decisions that ended up correct.
    pub errors_avoided: Option<Stat>,
    /// Value added in each repetition, in order.
    pub value_added_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub alpha: f64,
    pub repetitions: usize,
    /// False when the validation gate replaced the advisor by the human alone.
    pub deployed: bool,
    pub overall: Metrics,
    pub groups: Vec<GroupMetrics>,
}

/// One flat CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub group: String,
    pub metric: String,
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

impl Metrics {
    pub fn named(&self) -> Vec<(&'static str, Option<Stat>)> {
        vec![
            ("hdl", Some(self.hdl)),
            ("tdl", Some(self.tdl)),
            ("al", Some(self.al)),
            ("ttl", Some(self.ttl)),
            ("value_added", Some(self.value_added)),
            ("accuracy_improvement", Some(self.accuracy_improvement)),
            ("advising_costs_incurred", Some(self.advising_costs_incurred)),
            ("advising_costs_au", Some(self.advising_costs_au)),
            ("advising_rate", Some(self.advising_rate)),
            ("advising_confidence_mean", self.advising_confidence_mean),
            ("advising_accuracy", self.advising_accuracy),
            ("acceptance_rate", self.acceptance_rate),
            ("errors_avoided", self.errors_avoided),
        ]
    }
}

impl MetricsReport {
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut out = Vec::new();
        let all = std::iter::once(("all", &self.overall)).chain(self.groups.iter().map(|g| (g.group.as_str(), &g.metrics)));
        for (group, m) in all {
            for (metric, s) in m.named() {
                out.push(MetricRow {
                    group: group.to_string(),
                    metric: metric.to_string(),
                    mean: s.map(|s| s.mean),
                    se: s.map(|s| s.se),
                });
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in self.rows() {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn group(&self, name: &str) -> Option<&Metrics> {
        self.groups.iter().find(|g| g.group == name).map(|g| &g.metrics)
    }
}

/// What happened on one instance in one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub y: u8,
    pub h: u8,
    pub contradicted: bool,
    pub recommendation: Option<u8>,
    pub confidence: Option<f64>,
    pub accepted: bool,
    pub final_decision: u8,
}

/// Draw the human, consult the advisor, and draw acceptance of contradicting
/// advice from the profile's true behavior.
pub fn simulate_interactions(
    advisor: &Advisor,
    dataset: &Dataset,
    rows: &[usize],
    difficulty: &[f64],
    profile: &HumanProfile,
    seed: u64,
) -> Result<Vec<Interaction>, EvalError> {
    let mut rng = seeding::rng(seed);
    let mut out = Vec::with_capacity(rows.len());
    for &r in rows {
        let case = Case::from_dataset(dataset, r, difficulty[r]);
        let draw = profile.simulate(&case, &mut rng)?;
        let advice = advisor.advise(case.values, draw.h, draw.c_h)?;
        let contradicted = advice.contradicts(draw.h);
        let mut accepted = false;
        if contradicted {
            let rec = advice.effective(draw.h);
            let c_m = advice.confidence.unwrap_or(0.5).clamp(0.0, 1.0);
            accepted = profile.adb.sample_acceptance(c_m, draw.c_h, Direction::of(rec), &mut rng)?;
        }
        let final_decision = if accepted { advice.effective(draw.h) } else { draw.h };
        out.push(Interaction {
            y: case.label,
            h: draw.h,
            contradicted,
            recommendation: advice.recommendation,
            confidence: advice.confidence,
            accepted,
            final_decision,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    n: usize,
    human_loss: f64,
    team_loss: f64,
    contradictions: usize,
    accepted: usize,
    correct_advice: usize,
    confidence_sum: f64,
    human_errors: usize,
    errors_fixed: usize,
    human_correct: usize,
    final_correct: usize,
}

impl Tally {
    fn add(&mut self, costs: &CostSpec, x: &Interaction) {
        self.n += 1;
        self.human_loss += decision_loss(costs, x.y, x.h);
        self.team_loss += decision_loss(costs, x.y, x.final_decision);
        self.human_correct += usize::from(x.h == x.y);
        self.final_correct += usize::from(x.final_decision == x.y);
        if x.h != x.y {
            self.human_errors += 1;
            self.errors_fixed += usize::from(x.final_decision == x.y);
        }
        if x.contradicted {
            self.contradictions += 1;
            self.accepted += usize::from(x.accepted);
            self.correct_advice += usize::from(x.recommendation == Some(x.y));
            self.confidence_sum += x.confidence.unwrap_or(f64::NAN);
        }
    }
}

/// Aggregate per-repetition tallies of one population.
fn summarize(tallies: &[Tally], alpha: f64) -> Metrics {
    let n = tallies.first().map_or(0, |t| t.n);
    let per = |f: &dyn Fn(&Tally) -> f64| -> Vec<f64> { tallies.iter().map(f).collect() };
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let size = |t: &Tally| t.n.max(1) as f64;

    let hdl = per(&|t| t.human_loss / size(t));
    let tdl = per(&|t| t.team_loss / size(t));
    let al = per(&|t| alpha * t.contradictions as f64 / size(t));
    let ttl: Vec<f64> = tdl.iter().zip(&al).map(|(d, a)| d + a).collect();
    let va: Vec<f64> = hdl.iter().zip(&ttl).map(|(h, t)| h - t).collect();
    let rate = per(&|t| t.contradictions as f64 / size(t));

    let hdl_s = Stat::of(&hdl);
    let tdl_s = Stat::of(&tdl);
    let al_s = Stat::of(&al);
    // the identities hold on the reported means, not only per repetition
    let ttl_s = Stat {
        mean: tdl_s.mean + al_s.mean,
        se: Stat::of(&ttl).se,
    };
    let va_s = Stat {
        mean: hdl_s.mean - ttl_s.mean,
        se: Stat::of(&va).se,
    };
    let rate_s = Stat::of(&rate);

    Metrics {
        n_instances: n,
        hdl: hdl_s,
        tdl: tdl_s,
        al: al_s,
        ttl: ttl_s,
        value_added: va_s,
        accuracy_improvement: Stat::of(&per(&|t| (t.final_correct as f64 - t.human_correct as f64) / size(t))),
        advising_costs_incurred: Stat::of(&per(&|t| alpha * t.contradictions as f64)),
        advising_costs_au: Stat {
            mean: alpha * rate_s.mean,
            se: alpha * rate_s.se,
        },
        advising_rate: rate_s,
        advising_confidence_mean: Stat::optional(
            &tallies
                .iter()
                .map(|t| (t.contradictions > 0).then(|| t.confidence_sum / t.contradictions as f64))
                .collect::<Vec<_>>(),
        ),
        advising_accuracy: Stat::optional(
            &tallies.iter().map(|t| ratio(t.correct_advice, t.contradictions)).collect::<Vec<_>>(),
        ),
        acceptance_rate: Stat::optional(&tallies.iter().map(|t| ratio(t.accepted, t.contradictions)).collect::<Vec<_>>()),
        errors_avoided: Stat::optional(&tallies.iter().map(|t| ratio(t.errors_fixed, t.human_errors)).collect::<Vec<_>>()),
        value_added_samples: va,
    }
}

/// Evaluate `advisor` on `rows` against `profile`, redrawing the human's
/// decisions, confidences and acceptances in every repetition. `context`
/// holds the costs the team actually pays.
pub fn evaluate(
    advisor: &Advisor,
    dataset: &Dataset,
    rows: &[usize],
    difficulty: &[f64],
    profile: &HumanProfile,
    context: &CostSpec,
    spec: &EvalSpec,
) -> Result<MetricsReport, EvalError> {
    if spec.repetitions == 0 {
        return Err(EvalError::InvalidSpec("repetitions must be at least 1".into()));
    }
    if rows.is_empty() {
        return Err(EvalError::InvalidSpec("no instances to evaluate".into()));
    }
    context.validate()?;
    profile.validate()?;

    let mut membership = Vec::with_capacity(spec.groups.len());
    for g in &spec.groups {
        let mut m = Vec::with_capacity(rows.len());
        for &r in rows {
            m.push(g.matches(&dataset.rows[r].values, dataset.rows[r].label)?);
        }
        membership.push(m);
    }

    let runs: Vec<Vec<Interaction>> = (0..spec.repetitions)
        .into_par_iter()
        .map(|k| simulate_interactions(advisor, dataset, rows, difficulty, profile, seeding::derive(spec.seed, k as u64)))
        .collect::<Result<_, _>>()?;

    let mut overall = Vec::with_capacity(runs.len());
    let mut by_group = vec![Vec::with_capacity(runs.len()); spec.groups.len()];
    for run in &runs {
        let mut all = Tally::default();
        let mut groups = vec![Tally::default(); spec.groups.len()];
        for (i, x) in run.iter().enumerate() {
            all.add(context, x);
            for (g, m) in membership.iter().enumerate() {
                if m[i] {
                    groups[g].add(context, x);
                }
            }
        }
        overall.push(all);
        for (g, t) in groups.into_iter().enumerate() {
            by_group[g].push(t);
        }
    }

    Ok(MetricsReport {
        alpha: context.alpha,
        repetitions: spec.repetitions,
        deployed: true,
        overall: summarize(&overall, context.alpha),
        groups: spec
            .groups
            .iter()
            .zip(&by_group)
            .map(|(g, t)| GroupMetrics {
                group: g.display_name(),
                metrics: summarize(t, context.alpha),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Deploy,
    HumanAlone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub decision: GateDecision,
    pub validation: MetricsReport,
}

/// Evaluate on the validation rows and refuse to deploy an advisor whose
/// value added there is negative.
pub fn robustness_gate(
    advisor: &Advisor,
    dataset: &Dataset,
    val_rows: &[usize],
    difficulty: &[f64],
    profile: &HumanProfile,
    context: &CostSpec,
    spec: &EvalSpec,
) -> Result<GateOutcome, EvalError> {
    let validation = evaluate(advisor, dataset, val_rows, difficulty, profile, context, spec)?;
    let decision = if validation.overall.value_added.mean < 0.0 {
        GateDecision::HumanAlone
    } else {
        GateDecision::Deploy
    };
    Ok(GateOutcome { decision, validation })
}

impl GateOutcome {
    /// The policy to evaluate downstream.
    pub fn apply(&self, advisor: &Advisor) -> Advisor {
        match self.decision {
            GateDecision::Deploy => advisor.clone(),
            GateDecision::HumanAlone => Advisor::silent(),
        }
    }
}

/// Evaluate after the gate; a rejected advisor is reported as the human alone.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_gated(
    advisor: &Advisor,
    dataset: &Dataset,
    val_rows: &[usize],
    test_rows: &[usize],
    difficulty: &[f64],
    profile: &HumanProfile,
    context: &CostSpec,
    spec: &EvalSpec,
) -> Result<(GateOutcome, MetricsReport), EvalError> {
    let val_spec = EvalSpec {
        seed: seeding::derive_str(spec.seed, "validation"),
        ..spec.clone()
    };
    let gate = robustness_gate(advisor, dataset, val_rows, difficulty, profile, context, &val_spec)?;
    let mut report = evaluate(&gate.apply(advisor), dataset, test_rows, difficulty, profile, context, spec)?;
    report.deployed = gate.decision == GateDecision::Deploy;
    Ok((gate, report))
}

/// Paired t statistic and degrees of freedom for `a - b`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Option<(f64, usize)> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = Stat::of(&d);
    Some((s.mean / s.se, d.len() - 1))
}

#[cfg(test)]
mod tests;
