use std::path::Path;
use std::process::Command;

use selective_advisor::advisor::Advisor;
use selective_advisor::pipeline::{self, advisor_dir_name, PipelineConfig, PipelineError, RunManifest};
use selective_advisor::trainer::Variant;
use selective_advisor::AdvisorMode;

/// Heart with a short annealing schedule and few repetitions.
fn small(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.out = out.to_path_buf();
    c.trainer.iterations = 200;
    c.eval.repetitions = 5;
    c.eval.training_repetitions = 2;
    c.estimators.outcome_grid.truncate(1);
    c.estimators.outcome_folds = 2;
    c
}

fn manifest(out: &Path, name: &str) -> RunManifest {
    let text = std::fs::read_to_string(out.join("manifests").join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn prepare_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline::cmd_prepare(&small(a.path())).unwrap();
    pipeline::cmd_prepare(&small(b.path())).unwrap();
    let ma = manifest(a.path(), "prepare");
    assert_eq!(ma, manifest(b.path(), "prepare"));
    assert!(ma.artifacts.contains_key("dataset.json"));
    assert!(ma.artifacts.contains_key("difficulty.csv"));
}

#[test]
fn stages_chain_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(dir.path());
    assert!(matches!(
        pipeline::cmd_collect_interactions(&c),
        Err(PipelineError::MissingArtifact(_))
    ));
    let p = pipeline::cmd_prepare(&c).unwrap();
    assert_eq!(p.test_rows.len(), 127);
    let (_, panel) = pipeline::cmd_simulate_human(&c).unwrap();
    assert!(!panel.is_empty());
    let n = pipeline::cmd_collect_interactions(&c).unwrap();
    assert!(n > 0);
    let model = pipeline::cmd_fit_discretion(&c).unwrap();
    assert_eq!(model.n_records, n);

    let s = pipeline::cmd_train(&c, Variant::Tr, 0.1).unwrap();
    assert!(s.best_ttl <= s.empty_ttl);
    assert!((s.empirical_ttl - s.best_ttl).abs() < 1e-9);
    let bundle = dir.path().join("advisors").join(advisor_dir_name(Variant::Tr, 0.1));
    for f in ["ruleset.json", "discretion.json", "outcome.json", "costs.json", "manifest.json", "trace.csv"] {
        assert!(bundle.join(f).exists(), "{f}");
    }
    let (advisor, _) = Advisor::load_bundle(&bundle).unwrap();
    assert_eq!(advisor.costs.alpha, 0.1);

    let reports = pipeline::cmd_evaluate(&c, Some(Variant::Tr), Some(0.1)).unwrap();
    assert_eq!(reports.len(), 1);
    let m = &reports[0].1.overall;
    assert_eq!(m.n_instances, 127);
    assert!((m.ttl.mean - m.tdl.mean - m.al.mean).abs() <= 1e-12);
    assert!(dir.path().join("reports/TR_alpha0.1.csv").exists());
}

#[test]
fn task_only_bundle_advises_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(dir.path());
    let p = pipeline::cmd_prepare(&c).unwrap();
    pipeline::cmd_collect_interactions(&c).unwrap();
    pipeline::cmd_fit_discretion(&c).unwrap();
    pipeline::cmd_train(&c, Variant::TaskOnly, 0.2).unwrap();
    let (advisor, manifest) =
        Advisor::load_bundle(&dir.path().join("advisors").join(advisor_dir_name(Variant::TaskOnly, 0.2))).unwrap();
    assert_eq!(advisor.mode, AdvisorMode::TaskOnly);
    assert_eq!(manifest.variant.as_deref(), Some("task_only"));
    for &r in &p.test_rows {
        let a = advisor.advise(&p.dataset.rows[r].values, 0, 0.5).unwrap();
        assert!(a.offered && a.recommendation.is_some());
    }
}

#[test]
fn silent_advisor_adds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(dir.path());
    let p = pipeline::prepare(&c).unwrap();
    let human = pipeline::build_profile(&c, &p).unwrap();
    let (_, r) = pipeline::evaluate_policy(&c, &p, &human, &Advisor::silent(), 0.3, false, 1).unwrap();
    assert_eq!(r.overall.value_added.mean, 0.0);
    assert_eq!(r.overall.advising_rate.mean, 0.0);
    assert!(r.overall.acceptance_rate.is_none());
}

#[test]
fn sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(dir.path());
    c.alphas = vec![0.1, 0.4];
    c.variants = vec![Variant::Tr, Variant::TaskOnly];
    let result = pipeline::cmd_sweep(&c).unwrap();
    let curve = result.curve();
    assert_eq!(curve.len(), 4);
    assert!(curve.iter().all(|p| p.repetitions == 2));
    assert!(dir.path().join("sweep/curve.csv").exists());
    // the selective advisor never advises more when advice is dearer
    let rate = |a: f64| curve.iter().find(|p| p.alpha == a && p.variant == Variant::Tr).unwrap().advising_rate;
    assert!(rate(0.4) <= rate(0.1) + 0.05);
}

#[test]
fn case_study_reports_groups() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = PipelineConfig::heart_case_study();
    let base = small(dir.path());
    c.out = base.out;
    c.trainer = base.trainer;
    c.eval.repetitions = 5;
    c.estimators = base.estimators;
    let study = pipeline::cmd_case_study(&c).unwrap();
    assert_eq!(study.costs.lambda1, 3.0);
    assert_eq!(study.reports.len(), 2);
    for (_, r) in &study.reports {
        let names: Vec<&str> = r.groups.iter().map(|g| g.group.as_str()).collect();
        assert_eq!(names, ["male", "female", "young_with_disease"]);
    }
    assert!(study.paired.iter().any(|row| row.group == "female"));
    assert!(dir.path().join("case_study/table.csv").exists());
}

#[test]
fn degrade_adb_writes_one_row_per_level_and_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(dir.path());
    c.eval.noise_levels = vec![0.0, 1.0];
    c.variants = vec![Variant::Tr];
    c.alphas = vec![0.1];
    let rows = pipeline::cmd_degrade_adb(&c).unwrap();
    assert_eq!(rows.len(), 4);
    let auc = |level: f64| {
        let xs: Vec<f64> = rows.iter().filter(|r| r.level == level).filter_map(|r| r.auc).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!(auc(1.0) < auc(0.0));
    assert!(dir.path().join("noise/noise.csv").exists());
}

fn cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_selective-advisor"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alphas": []}"#).unwrap();
    let o = cli(&["prepare", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ConfigError"));

    let o = cli(&["fit-discretion"], &dir.path().join("empty"));
    assert_eq!(o.status.code(), Some(3));

    let o = cli(&["train", "--variant", "TR_maybe"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = cli(&["prepare"], dir.path());
    assert!(o.status.success());
    let sizes: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(sizes["train"], 505);
}
