use super::*;
use crate::advisor::AdvisorMode;
use crate::data::{Condition, FeatureKind, FeatureSpec, Instance, Op, SplitTag, Value};
use crate::estimators::DiscretionModel;
use crate::humansim::{AdbParams, ConfidenceBehavior, DecisionBehavior, GroupValue};
use crate::rules::{AdvisingRule, Rule, RuleSet};

fn line_dataset(labels: &[u8]) -> Dataset {
    Dataset {
        schema: vec![FeatureSpec {
            name: "x".into(),
            kind: FeatureKind::Numeric,
        }],
        label_column: "y".into(),
        label_values: ["0".into(), "1".into()],
        rows: labels
            .iter()
            .enumerate()
            .map(|(i, &y)| Instance {
                id: i,
                values: vec![Value::Num(i as f64)],
                label: y,
            })
            .collect(),
        split_tags: vec![SplitTag::Test; labels.len()],
        seed: None,
    }
}

fn interval(lo: f64, hi: f64) -> Rule {
    Rule::new(vec![
        Condition::numeric("x", 0, Op::Ge, lo),
        Condition::numeric("x", 0, Op::Lt, hi),
    ])
    .unwrap()
}

/// Wrong with certainty on `x < wrong_below`, right elsewhere; confidence 0.6;
/// always accepts advice toward 1 and never toward 0.
fn scripted_human(wrong_below: f64) -> HumanProfile {
    HumanProfile {
        decision: DecisionBehavior::CustomGroup {
            groups: vec![
                GroupValue {
                    group: Group::new(vec![Condition::numeric("x", 0, Op::Lt, wrong_below)]),
                    value: 0.0,
                },
                GroupValue {
                    group: Group::new(vec![]),
                    value: 1.0,
                },
            ],
        },
        confidence: ConfidenceBehavior::CustomGroup {
            groups: vec![GroupValue {
                group: Group::new(vec![]),
                value: 0.6,
            }],
        },
        adb: AdbParams {
            accept_boost: 1e6,
            accept_damp: 0.0,
            ..AdbParams::default()
        },
        seed: 0,
    }
}

fn task_only(rule: Rule, precision: f64) -> Advisor {
    Advisor {
        rule_set: RuleSet {
            positive: vec![AdvisingRule {
                rule,
                precision,
                support: 0.5,
            }],
            negative: vec![],
        },
        discretion: DiscretionModel::fixed(1.0),
        outcome: None,
        costs: CostSpec::default(),
        mode: AdvisorMode::TaskOnly,
        negative_precision: 0.9,
    }
}

fn spec(repetitions: usize, groups: Vec<Group>) -> EvalSpec {
    EvalSpec {
        repetitions,
        groups,
        seed: 3,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn silent_advisor_adds_nothing() {
    let d = line_dataset(&[1, 0, 1, 1, 0, 0, 1, 0]);
    let rows: Vec<usize> = (0..d.len()).collect();
    let profile = HumanProfile {
        decision: DecisionBehavior::DifficultyBiased {
            threshold: 0.5,
            low_accuracy: 0.6,
            high_accuracy: 0.9,
        },
        confidence: ConfidenceBehavior::AccuracyBiased { kappa: 0.05 },
        adb: AdbParams::default(),
        seed: 1,
    };
    let r = evaluate(
        &Advisor::silent(),
        &d,
        &rows,
        &[0.3; 8],
        &profile,
        &CostSpec::with_alpha(0.2),
        &spec(20, vec![]),
    )
    .unwrap();
    let m = &r.overall;
    assert_eq!(m.tdl, m.hdl);
    assert_eq!(m.al.mean, 0.0);
    assert_eq!(m.value_added.mean, 0.0);
    assert!(m.acceptance_rate.is_none() && m.advising_accuracy.is_none());
    assert!(m.hdl.mean > 0.0);
}

#[test]
fn correct_always_accepted_advice_recovers_all_loss() {
    let labels = [0, 0, 1, 1, 1, 0, 0, 1, 1, 0];
    let d = line_dataset(&labels);
    let rows: Vec<usize> = (0..d.len()).collect();
    let mut advisor = task_only(interval(2.0, 5.0), 1.0);
    advisor.rule_set.positive.push(AdvisingRule {
        rule: interval(7.0, 9.0),
        precision: 1.0,
        support: 0.2,
    });
    // errs everywhere below 6, accepts advice in both directions
    let mut human = scripted_human(6.0);
    human.adb.accept_damp = 1e6;
    let r = evaluate(&advisor, &d, &rows, &[0.0; 10], &human, &CostSpec::default(), &spec(3, vec![])).unwrap();
    assert!(close(r.overall.tdl.mean, 0.0));
    assert!(close(r.overall.value_added.mean, r.overall.hdl.mean));
    assert!(close(r.overall.hdl.mean, 0.6));
    assert_eq!(r.overall.errors_avoided.unwrap().mean, 1.0);
}

#[test]
fn hand_computed_table() {
    // x:      0  1  2  3  4  5
    // y:      1  1  0  0  1  0
    // h:      0  0  1  0  1  0     (wrong on x < 3)
    // advice: 0  1  1  1  1  0     (task-only, positive rule on [1, 5))
    // final:  0  1  1  1  1  0     (both contradictions point to 1 and are accepted)
    let d = line_dataset(&[1, 1, 0, 0, 1, 0]);
    let rows: Vec<usize> = (0..6).collect();
    let advisor = task_only(interval(1.0, 5.0), 0.75);
    let positives = Group::new(vec![]).with_label(1).named("positives");
    let r = evaluate(
        &advisor,
        &d,
        &rows,
        &[0.0; 6],
        &scripted_human(3.0),
        &CostSpec::with_alpha(0.2),
        &spec(1, vec![positives]),
    )
    .unwrap();
    let m = &r.overall;
    assert!(close(m.hdl.mean, 0.5));
    assert!(close(m.tdl.mean, 0.5));
    assert!(close(m.al.mean, 0.2 * 2.0 / 6.0));
    assert!(close(m.ttl.mean, 0.5 + 0.2 * 2.0 / 6.0));
    assert!(close(m.value_added.mean, -0.2 * 2.0 / 6.0));
    assert!(close(m.advising_rate.mean, 2.0 / 6.0));
    assert!(close(m.advising_costs_incurred.mean, 0.4));
    assert!(close(m.advising_costs_au.mean, 0.2 / 3.0));
    assert!(close(m.accuracy_improvement.mean, 0.0));
    assert_eq!(m.acceptance_rate.unwrap().mean, 1.0);
    assert_eq!(m.advising_accuracy.unwrap().mean, 0.5);
    assert_eq!(m.advising_confidence_mean.unwrap().mean, 0.75);
    assert!(close(m.errors_avoided.unwrap().mean, 1.0 / 3.0));
    assert_eq!(m.hdl.se, 0.0);

    let g = r.group("positives").unwrap();
    assert_eq!(g.n_instances, 3);
    assert!(close(g.hdl.mean, 2.0 / 3.0));
    assert!(close(g.tdl.mean, 1.0 / 3.0));
    assert!(close(g.al.mean, 0.2 / 3.0));
    assert!(close(g.errors_avoided.unwrap().mean, 0.5));

    let rows = r.rows();
    assert_eq!(rows.len(), 2 * 13);
    assert!(rows.iter().any(|x| x.group == "positives" && x.metric == "errors_avoided"));
}

#[test]
fn report_identities_hold_exactly() {
    let d = line_dataset(&[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1]);
    let rows: Vec<usize> = (0..d.len()).collect();
    let mut human = scripted_human(5.0);
    human.adb = AdbParams::default();
    for alpha in [0.0, 0.1, 0.37] {
        let r = evaluate(
            &task_only(interval(2.0, 9.0), 0.8),
            &d,
            &rows,
            &[0.0; 12],
            &human,
            &CostSpec::with_alpha(alpha),
            &spec(17, vec![Group::new(vec![]).with_label(0)]),
        )
        .unwrap();
        for m in std::iter::once(&r.overall).chain(r.groups.iter().map(|g| &g.metrics)) {
            assert_eq!(m.ttl.mean, m.tdl.mean + m.al.mean);
            assert_eq!(m.value_added.mean, m.hdl.mean - m.ttl.mean);
        }
    }
}

#[test]
fn evaluation_is_deterministic_and_json_round_trips() {
    let d = line_dataset(&[1, 0, 1, 1, 0, 0]);
    let rows: Vec<usize> = (0..6).collect();
    let mut human = scripted_human(2.0);
    human.adb = AdbParams::default();
    let run = || {
        evaluate(
            &task_only(interval(0.0, 4.0), 0.7),
            &d,
            &rows,
            &[0.0; 6],
            &human,
            &CostSpec::with_alpha(0.1),
            &spec(30, vec![]),
        )
        .unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let back: MetricsReport = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn gate_rejects_harmful_advisor() {
    // human is always right; advice toward 1 is always wrong on negatives and always accepted
    let d = line_dataset(&[0, 0, 0, 1, 1, 1]);
    let rows: Vec<usize> = (0..6).collect();
    let human = scripted_human(-1.0);
    let harmful = task_only(interval(0.0, 3.0), 0.9);
    let costs = CostSpec::with_alpha(0.1);
    let (gate, report) =
        evaluate_gated(&harmful, &d, &rows, &rows, &[0.0; 6], &human, &costs, &spec(5, vec![])).unwrap();
    assert_eq!(gate.decision, GateDecision::HumanAlone);
    assert!(gate.validation.overall.value_added.mean < 0.0);
    assert!(!report.deployed);
    assert_eq!(report.overall.value_added.mean, 0.0);

    let helpful = task_only(interval(3.0, 6.0), 0.9);
    let mut wrong = scripted_human(6.0);
    wrong.adb.accept_damp = 1e6;
    let (gate, report) =
        evaluate_gated(&helpful, &d, &rows, &rows, &[0.0; 6], &wrong, &costs, &spec(5, vec![])).unwrap();
    assert_eq!(gate.decision, GateDecision::Deploy);
    assert!(report.deployed && report.overall.value_added.mean > 0.0);
}

#[test]
fn degrade_keeps_level_zero_and_rejects_out_of_range() {
    let h = scripted_human(1.0);
    let ps = degrade_adb(&h, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(ps[0], h);
    assert_eq!(ps[2].adb.noise_level, 1.0);
    assert!(degrade_adb(&h, &[1.5]).is_err());
}

#[test]
fn grid_order_is_independent_of_workers() {
    let task = |ai: usize, alpha: f64, v: crate::trainer::Variant, rep: usize| -> Result<MetricsReport, EvalError> {
        let d = line_dataset(&[1, 0, 1, 1]);
        let mut human = scripted_human(2.0);
        human.adb = AdbParams::default();
        let s = EvalSpec {
            repetitions: 4,
            groups: vec![],
            seed: seeding::derive(ai as u64, rep as u64) ^ v as u64,
        };
        evaluate(
            &task_only(interval(0.0, 3.0), 0.8),
            &d,
            &[0, 1, 2, 3],
            &[0.0; 4],
            &human,
            &CostSpec::with_alpha(alpha),
            &s,
        )
    };
    use crate::trainer::Variant;
    let vs = [Variant::Tr, Variant::TaskOnly];
    let one = run_grid(&[0.0, 0.3], &vs, 3, Some(1), task).unwrap();
    let four = run_grid(&[0.0, 0.3], &vs, 3, Some(4), task).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.points.len(), 12);
    let curve = one.curve();
    assert_eq!(curve.len(), 4);
    assert!(curve.iter().all(|c| c.repetitions == 3));
}

#[test]
fn paired_t_statistic() {
    let (t, df) = paired_t(&[1.0, 2.0, 3.0, 5.0], &[0.0, 1.0, 2.0, 3.0]).unwrap();
    // differences 1, 1, 1, 2: mean 1.25, sd 0.5, se 0.25
    assert!(close(t, 5.0));
    assert_eq!(df, 3);
    assert!(paired_t(&[1.0], &[0.0]).is_none());
}
