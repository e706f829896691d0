use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{
    build_profile, build_trials, evaluate_policy, interaction_log, prepare, prepare_from, sweep, trial_seed, Prepared,
    Trial,
};
use super::{io_err, PipelineConfig, PipelineError, RunManifest};
use crate::advisor::{sha256_hex, Advisor, BundleManifest, CostSpec};
use crate::data::{Condition, Dataset, SplitTag};
use crate::estimators::{
    fit_discretion, read_interactions, write_interactions, DiscretionModel, DiscretionParams, TabularModel,
};
use crate::eval::{self, degrade_adb, paired_t, MetricsReport, Stat, SweepResult};
use crate::humansim::{HumanProfile, Panel};
use crate::seeding;
use crate::trainer::{empirical_ttl, write_trace, TrainResult, Variant};

const DATASET: &str = "dataset.json";
const CONDITIONS: &str = "conditions.json";
const PARTITION: &str = "partition.json";
const BOOTSTRAP: &str = "bootstrap.json";
const DIFFICULTY: &str = "difficulty.csv";
const PROFILE: &str = "profile.json";
const HUMAN_PANEL: &str = "human_panel.csv";
const INTERACTIONS: &str = "interactions.csv";
const DISCRETION: &str = "discretion.json";

pub fn advisor_dir_name(variant: Variant, alpha: f64) -> String {
    format!("{}_alpha{}", variant.name(), alpha)
}

fn write_json<T: Serialize + ?Sized>(root: &Path, rel: &str, value: &T) -> Result<PathBuf, PipelineError> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(&path, serde_json::to_string_pretty(value)?).map_err(io_err(&path))?;
    Ok(PathBuf::from(rel))
}

fn write_rows<T: Serialize>(root: &Path, rel: &str, rows: &[T]) -> Result<PathBuf, PipelineError> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(PathBuf::from(rel))
}

fn read_json<T: for<'de> Deserialize<'de>>(root: &Path, rel: &str) -> Result<T, PipelineError> {
    let path = root.join(rel);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path));
    }
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}

fn ensure_out(config: &PipelineConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.out).map_err(io_err(&config.out))
}

#[derive(Debug, Serialize, Deserialize)]
struct ConditionsFile {
    conditions: Vec<Condition>,
    /// Index of each condition's negation, or `usize::MAX`.
    complement: Vec<usize>,
    warnings: Vec<String>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Partition {
    interaction_rows: Vec<usize>,
    advisor_rows: Vec<usize>,
    val_rows: Vec<usize>,
    test_rows: Vec<usize>,
}

#[derive(Serialize)]
struct DifficultyRow {
    instance_id: usize,
    split: &'static str,
    difficulty: f64,
}

/// Load, split and binarize the dataset; fit the bootstrap model.
pub fn cmd_prepare(config: &PipelineConfig) -> Result<Prepared, PipelineError> {
    config.validate()?;
    ensure_out(config)?;
    let p = prepare(config)?;
    let out = &config.out;
    let mut files = Vec::new();
    let ds = out.join(DATASET);
    p.dataset.save_json(&ds)?;
    files.push(PathBuf::from(DATASET));
    files.push(write_json(
        out,
        CONDITIONS,
        &ConditionsFile {
            conditions: p.view.catalog.clone(),
            complement: p.view.complement.clone(),
            warnings: p.view.warnings.clone(),
        },
    )?);
    files.push(write_json(
        out,
        PARTITION,
        &Partition {
            interaction_rows: p.interaction_rows.clone(),
            advisor_rows: p.advisor_rows.clone(),
            val_rows: p.val_rows.clone(),
            test_rows: p.test_rows.clone(),
        },
    )?);
    files.push(write_json(out, BOOTSTRAP, &p.bootstrap)?);
    let rows: Vec<DifficultyRow> = p
        .dataset
        .rows
        .iter()
        .zip(&p.dataset.split_tags)
        .zip(&p.difficulty)
        .map(|((r, t), &d)| DifficultyRow {
            instance_id: r.id,
            split: match t {
                SplitTag::Train => "train",
                SplitTag::Val => "val",
                SplitTag::Test => "test",
                SplitTag::Unused => "unused",
            },
            difficulty: d,
        })
        .collect();
    files.push(write_rows(out, DIFFICULTY, &rows)?);
    RunManifest::new("prepare", config)?.finish(out, &files)?;
    Ok(p)
}

/// Rebuild the prepared state from the artifacts written by `prepare`.
pub fn load_prepared(config: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let out = &config.out;
    let ds = out.join(DATASET);
    if !ds.exists() {
        return Err(PipelineError::MissingArtifact(ds));
    }
    let dataset = Dataset::load_json(&ds)?;
    let partition: Partition = read_json(out, PARTITION)?;
    let bootstrap: TabularModel = read_json(out, BOOTSTRAP)?;
    let mut p = prepare_from(config, dataset, config.dataset.domain)?;
    if partition.interaction_rows != p.interaction_rows || partition.advisor_rows != p.advisor_rows {
        return Err(PipelineError::Config(
            "prepared artifacts were written with a different seed or split; rerun `prepare`".into(),
        ));
    }
    p.bootstrap = bootstrap;
    p.difficulty = p
        .bootstrap
        .predict_all(&p.dataset)
        .into_iter()
        .map(crate::humansim::difficulty_proxy)
        .collect();
    Ok(p)
}

/// Write the simulated expert and one draw of their decisions on the advisor rows.
pub fn cmd_simulate_human(config: &PipelineConfig) -> Result<(HumanProfile, Panel), PipelineError> {
    config.validate()?;
    let p = load_prepared(config)?;
    let profile = build_profile(config, &p)?;
    let out = &config.out;
    let mut files = vec![write_json(out, PROFILE, &profile)?];
    let mut rng = seeding::rng(seeding::derive_str(trial_seed(config.seed, 0), "panel"));
    let panel = Panel::simulate(&profile, &p.dataset, &p.advisor_rows, &p.difficulty, &mut rng)?;
    panel.write_csv(&p.dataset, &out.join(HUMAN_PANEL))?;
    files.push(PathBuf::from(HUMAN_PANEL));
    RunManifest::new("simulate-human", config)?.finish(out, &files)?;
    Ok((profile, panel))
}

/// Log the human's reactions to the bootstrap advisor on the interaction rows.
pub fn cmd_collect_interactions(config: &PipelineConfig) -> Result<usize, PipelineError> {
    config.validate()?;
    let p = load_prepared(config)?;
    let profile = build_profile(config, &p)?;
    let records = interaction_log(
        &p,
        &profile,
        &p.interaction_rows,
        seeding::derive_str(trial_seed(config.seed, 0), "interactions"),
    )?;
    let path = config.out.join(INTERACTIONS);
    write_interactions(&records, &path)?;
    RunManifest::new("collect-interactions", config)?.finish(&config.out, &[PathBuf::from(INTERACTIONS)])?;
    Ok(records.len())
}

/// Fit the discretion model on the logged interactions.
pub fn cmd_fit_discretion(config: &PipelineConfig) -> Result<DiscretionModel, PipelineError> {
    config.validate()?;
    let path = config.out.join(INTERACTIONS);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path));
    }
    let records = read_interactions(&path)?;
    let model = fit_discretion(
        &records,
        &DiscretionParams {
            seed: seeding::derive_str(trial_seed(config.seed, 0), "discretion"),
            ..config.estimators.discretion.clone()
        },
    )?;
    let f = write_json(&config.out, DISCRETION, &model)?;
    RunManifest::new("fit-discretion", config)?.finish(&config.out, &[f])?;
    Ok(model)
}

/// Training repetition 0, reusing the logged interactions and fitted
/// discretion model when they are on disk.
fn first_trial<'a>(config: &PipelineConfig, p: &'a Prepared, profile: &HumanProfile) -> Result<Trial<'a>, PipelineError> {
    let recs = config.out.join(INTERACTIONS);
    let disc = config.out.join(DISCRETION);
    if recs.exists() && disc.exists() {
        let records = read_interactions(&recs)?;
        let discretion: DiscretionModel = read_json(&config.out, DISCRETION)?;
        Trial::with_discretion(config, p, profile, 0, records, discretion)
    } else {
        Trial::build(config, p, profile, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub variant: Variant,
    pub alpha: f64,
    /// Objective value of the returned rule set on the training panel.
    pub best_ttl: f64,
    pub empty_ttl: f64,
    /// Expected team loss recomputed through the advisor's inference path.
    pub empirical_ttl: f64,
    /// Human decision loss on the training panel.
    pub human_loss: f64,
    pub iterations_run: usize,
    pub stopped_early: bool,
    pub positive_rules: usize,
    pub negative_rules: usize,
    pub discretion_holdout_auc: Option<f64>,
}

impl TrainSummary {
    fn of(trial: &Trial, variant: Variant, alpha: f64, r: &TrainResult) -> Result<Self, PipelineError> {
        Ok(TrainSummary {
            variant,
            alpha,
            best_ttl: r.best_ttl,
            empty_ttl: r.empty_ttl,
            empirical_ttl: empirical_ttl(&r.advisor, &trial.prepared.dataset, &trial.panel)?,
            human_loss: trial.panel.human_loss(&r.advisor.costs),
            iterations_run: r.iterations_run,
            stopped_early: r.stopped_early,
            positive_rules: r.advisor.rule_set.positive.len(),
            negative_rules: r.advisor.rule_set.negative.len(),
            discretion_holdout_auc: trial.discretion.holdout_auc,
        })
    }
}

fn save_advisor(
    config: &PipelineConfig,
    trial: &Trial,
    rel_dir: &str,
    variant: Variant,
    alpha: f64,
    r: &TrainResult,
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = config.out.join(rel_dir);
    let mut m = BundleManifest {
        variant: Some(variant.name().to_string()),
        ..Default::default()
    };
    m.seeds.insert("master".into(), config.seed);
    m.seeds.insert("trial".into(), trial.seed);
    m.data.insert(
        "dataset_sha256".into(),
        sha256_hex(serde_json::to_string(&trial.prepared.dataset)?.as_bytes()),
    );
    r.advisor.save_bundle(&dir, &m)?;
    write_trace(&r.trace, &dir.join("trace.csv"))?;
    let summary = TrainSummary::of(trial, variant, alpha, r)?;
    write_json(&config.out, &format!("{rel_dir}/summary.json"), &summary)?;
    let mut files: Vec<PathBuf> = ["ruleset.json", "discretion.json", "outcome.json", "costs.json", "manifest.json"]
        .iter()
        .chain(&["trace.csv", "summary.json"])
        .map(|f| PathBuf::from(rel_dir).join(f))
        .collect();
    files.sort();
    Ok(files)
}

/// Train one advisor and write its bundle, trace and summary.
pub fn cmd_train(config: &PipelineConfig, variant: Variant, alpha: f64) -> Result<TrainSummary, PipelineError> {
    config.validate()?;
    let p = load_prepared(config)?;
    let profile = build_profile(config, &p)?;
    let trial = first_trial(config, &p, &profile)?;
    let r = trial.train(config, variant, alpha)?;
    let rel = format!("advisors/{}", advisor_dir_name(variant, alpha));
    let files = save_advisor(config, &trial, &rel, variant, alpha, &r)?;
    RunManifest::new(&format!("train_{}", advisor_dir_name(variant, alpha)), config)?.finish(&config.out, &files)?;
    TrainSummary::of(&trial, variant, alpha, &r)
}

/// Evaluate trained bundles on the test split; `variant` and `alpha`
/// restrict the config's grid.
pub fn cmd_evaluate(
    config: &PipelineConfig,
    variant: Option<Variant>,
    alpha: Option<f64>,
) -> Result<Vec<(String, MetricsReport)>, PipelineError> {
    config.validate()?;
    let p = load_prepared(config)?;
    let mut human = build_profile(config, &p)?;
    human.adb.noise_level = config.human.noise_level;
    let variants: Vec<Variant> = variant.map_or_else(|| config.variants.clone(), |v| vec![v]);
    let alphas: Vec<f64> = alpha.map_or_else(|| config.alphas.clone(), |a| vec![a]);
    let mut out = Vec::new();
    let mut files = Vec::new();
    for &v in &variants {
        for &a in &alphas {
            let name = advisor_dir_name(v, a);
            let dir = config.out.join("advisors").join(&name);
            if !dir.exists() {
                return Err(PipelineError::MissingArtifact(dir));
            }
            let (advisor, _) = Advisor::load_bundle(&dir)?;
            let (gate, report) =
                evaluate_policy(config, &p, &human, &advisor, a, config.eval.gate, trial_seed(config.seed, 0))?;
            files.push(write_json(&config.out, &format!("reports/{name}.json"), &report)?);
            let csv = format!("reports/{name}.csv");
            report.write_csv(&config.out.join(&csv))?;
            files.push(PathBuf::from(csv));
            if let Some(g) = gate {
                files.push(write_json(&config.out, &format!("reports/{name}_gate.json"), &g)?);
            }
            out.push((name, report));
        }
    }
    RunManifest::new("evaluate", config)?.finish(&config.out, &files)?;
    Ok(out)
}

#[derive(Serialize)]
struct SweepRow<'a> {
    alpha: f64,
    variant: Variant,
    repetition: usize,
    group: &'a str,
    metric: &'a str,
    mean: Option<f64>,
    se: Option<f64>,
}

/// Train and evaluate the full (alpha, variant, repetition) grid in-line.
pub fn cmd_sweep(config: &PipelineConfig) -> Result<SweepResult, PipelineError> {
    config.validate()?;
    ensure_out(config)?;
    let p = prepare(config)?;
    let profile = build_profile(config, &p)?;
    let trials = build_trials(config, &p, &profile)?;
    let result = sweep(config, &trials, |alpha, variant, rep, r| {
        if rep == 0 {
            let rel = format!("sweep/advisors/{}", advisor_dir_name(variant, alpha));
            save_advisor(config, &trials[0], &rel, variant, alpha, r)?;
        }
        Ok(())
    })?;
    let mut files = Vec::new();
    let curve = "sweep/curve.csv";
    result.write_curve_csv(&config.out.join(curve))?;
    files.push(PathBuf::from(curve));
    files.push(write_json(&config.out, "sweep/result.json", &result)?);
    let mut rows = Vec::new();
    let flat: Vec<_> = result.points.iter().map(|pt| (pt, pt.report.rows())).collect();
    for (pt, rs) in &flat {
        for r in rs {
            rows.push(SweepRow {
                alpha: pt.alpha,
                variant: pt.variant,
                repetition: pt.repetition,
                group: &r.group,
                metric: &r.metric,
                mean: r.mean,
                se: r.se,
            });
        }
    }
    files.push(write_rows(&config.out, "sweep/reports.csv", &rows)?);
    for &a in &config.alphas {
        for &v in &config.variants {
            let rel = format!("sweep/advisors/{}", advisor_dir_name(v, a));
            for f in ["ruleset.json", "discretion.json", "outcome.json", "costs.json", "manifest.json", "trace.csv", "summary.json"] {
                files.push(PathBuf::from(&rel).join(f));
            }
        }
    }
    RunManifest::new("sweep", config)?.finish(&config.out, &files)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub group: String,
    pub variant: Variant,
    pub baseline: Variant,
    /// Mean of `value_added(variant) - value_added(baseline)` over repetitions.
    pub mean_difference: f64,
    pub t: Option<f64>,
    pub df: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub alpha: f64,
    pub costs: CostSpec,
    pub reports: Vec<(Variant, MetricsReport)>,
    pub paired: Vec<PairedRow>,
}

#[derive(Serialize)]
struct CaseRow<'a> {
    variant: Variant,
    group: &'a str,
    metric: &'a str,
    mean: Option<f64>,
    se: Option<f64>,
}

/// Train every configured variant at the first alpha and report advising
/// behavior per group, with paired comparisons against the first variant.
pub fn cmd_case_study(config: &PipelineConfig) -> Result<CaseStudy, PipelineError> {
    config.validate()?;
    ensure_out(config)?;
    let p = prepare(config)?;
    let profile = build_profile(config, &p)?;
    let trial = Trial::build(config, &p, &profile, 0)?;
    let alpha = config.alphas[0];
    let mut reports = Vec::new();
    for &v in &config.variants {
        let r = trial.train(config, v, alpha)?;
        let (_, report) = trial.evaluate(config, &r.advisor, alpha, config.eval.gate)?;
        reports.push((v, report));
    }
    let (base_v, base) = &reports[0];
    let mut paired = Vec::new();
    for (v, rep) in &reports[1..] {
        let mut pairs = vec![("all".to_string(), &base.overall, &rep.overall)];
        for (g, m) in base.groups.iter().zip(&rep.groups) {
            pairs.push((g.group.clone(), &g.metrics, &m.metrics));
        }
        for (group, b, m) in pairs {
            let t = paired_t(&b.value_added_samples, &m.value_added_samples);
            let diffs: Vec<f64> = b
                .value_added_samples
                .iter()
                .zip(&m.value_added_samples)
                .map(|(x, y)| x - y)
                .collect();
            paired.push(PairedRow {
                group,
                variant: *base_v,
                baseline: *v,
                mean_difference: Stat::of(&diffs).mean,
                t: t.map(|x| x.0).filter(|x| x.is_finite()),
                df: t.map(|x| x.1),
            });
        }
    }
    let mut rows = Vec::new();
    let flat: Vec<_> = reports.iter().map(|(v, r)| (*v, r.rows())).collect();
    for (v, rs) in &flat {
        for r in rs {
            rows.push(CaseRow {
                variant: *v,
                group: &r.group,
                metric: &r.metric,
                mean: r.mean,
                se: r.se,
            });
        }
    }
    let study = CaseStudy {
        alpha,
        costs: CostSpec { alpha, ..config.costs },
        reports,
        paired,
    };
    let files = vec![
        write_rows(&config.out, "case_study/table.csv", &rows)?,
        write_rows(&config.out, "case_study/paired.csv", &study.paired)?,
        write_json(&config.out, "case_study/study.json", &study)?,
    ];
    RunManifest::new("case-study", config)?.finish(&config.out, &files)?;
    Ok(study)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub level: f64,
    pub repetition: usize,
    /// Discretion-model AUC against acceptances drawn from the perturbed human.
    pub auc: Option<f64>,
    pub value_added: f64,
    pub se: f64,
    pub gated_value_added: f64,
    pub gated_se: f64,
    pub deployed: bool,
}

/// Passes over the train rows used to draw fresh acceptance events.
const FRESH_PASSES: usize = 10;

/// Train the first variant at the first alpha on every repetition, then
/// evaluate it against increasingly noisy acceptance, with and without the gate.
pub fn cmd_degrade_adb(config: &PipelineConfig) -> Result<Vec<NoiseRow>, PipelineError> {
    config.validate()?;
    ensure_out(config)?;
    let p = prepare(config)?;
    let profile = build_profile(config, &p)?;
    let trials = build_trials(config, &p, &profile)?;
    let alpha = config.alphas[0];
    let variant = config.variants[0];
    let levels = &config.eval.noise_levels;
    let humans = degrade_adb(&profile, levels)?;
    let mut train_rows = p.interaction_rows.clone();
    train_rows.extend(&p.advisor_rows);
    let mut rows = Vec::new();
    for (rep, trial) in trials.iter().enumerate() {
        let trained = trial.train(config, variant, alpha)?;
        let mut events = Vec::new();
        for pass in 0..FRESH_PASSES {
            let s = seeding::derive(seeding::derive_str(trial.seed, "fresh"), pass as u64);
            events.extend(interaction_log(&p, &profile, &train_rows, s)?);
        }
        for (&level, human) in levels.iter().zip(&humans) {
            let auc = eval::acceptance_auc(&trial.discretion, human, &events, seeding::derive_str(trial.seed, "auc"))?;
            let (_, plain) = trial.evaluate_against(config, &trained.advisor, alpha, false, human)?;
            let (_, gated) = trial.evaluate_against(config, &trained.advisor, alpha, true, human)?;
            rows.push(NoiseRow {
                level,
                repetition: rep,
                auc,
                value_added: plain.overall.value_added.mean,
                se: plain.overall.value_added.se,
                gated_value_added: gated.overall.value_added.mean,
                gated_se: gated.overall.value_added.se,
                deployed: gated.deployed,
            });
        }
    }
    let summary: Vec<BTreeMap<&str, f64>> = levels
        .iter()
        .map(|&level| {
            let at: Vec<&NoiseRow> = rows.iter().filter(|r| r.level == level).collect();
            let col = |f: &dyn Fn(&NoiseRow) -> f64| Stat::of(&at.iter().map(|r| f(r)).collect::<Vec<_>>());
            let auc = col(&|r| r.auc.unwrap_or(f64::NAN));
            let va = col(&|r| r.value_added);
            let gva = col(&|r| r.gated_value_added);
            let dep = col(&|r| f64::from(u8::from(r.deployed)));
            BTreeMap::from([
                ("level", level),
                ("auc", auc.mean),
                ("value_added", va.mean),
                ("value_added_se", va.se),
                ("gated_value_added", gva.mean),
                ("gated_value_added_se", gva.se),
                ("deployed_fraction", dep.mean),
            ])
        })
        .collect();
    let files = vec![
        write_rows(&config.out, "noise/noise.csv", &rows)?,
        write_json(&config.out, "noise/summary.json", &summary)?,
    ];
    RunManifest::new("degrade-adb", config)?.finish(&config.out, &files)?;
    Ok(rows)
}
