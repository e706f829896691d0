use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::{HumanPreset, PipelineConfig};
use super::PipelineError;
use crate::advisor::{Advisor, CostSpec};
use crate::data::synthetic::{self, Domain};
use crate::data::{binarize, load_csv, BinarizedView, Dataset, SplitTag};
use crate::estimators::{
    collect_interactions, fit_discretion, fit_logistic, fit_outcome_model, DiscretionModel, DiscretionParams,
    InteractionRecord, TabularModel,
};
use crate::eval::{self, EvalSpec, GateOutcome, MetricsReport, SweepResult};
use crate::humansim::{difficulty_proxy, presets, Group, HumanProfile};
use crate::rules::{mine_candidates, CandidatePool};
use crate::seeding;
use crate::trainer::{train_variant, TrainResult, TrainingPanel, Variant};

/// Split dataset with everything that does not depend on the simulated human.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub domain: Option<Domain>,
    pub view: BinarizedView,
    /// Train rows whose interactions with the bootstrap advisor train the discretion model.
    pub interaction_rows: Vec<usize>,
    /// Train rows the advisor itself is fit on.
    pub advisor_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Logistic model fit on the advisor rows; bootstrap advisor and difficulty proxy.
    pub bootstrap: TabularModel,
    /// Per dataset row.
    pub difficulty: Vec<f64>,
    /// Report groups with columns resolved.
    pub groups: Vec<Group>,
}

pub fn load_dataset(config: &PipelineConfig) -> Result<(Dataset, Option<Domain>), PipelineError> {
    let d = &config.dataset;
    let domain = d.domain;
    let raw = match (&d.path, domain) {
        (Some(p), _) => {
            let opts = d
                .load
                .clone()
                .or_else(|| domain.map(|dm| dm.load_options()))
                .ok_or_else(|| PipelineError::Config("missing load options".into()))?;
            load_csv(p, &opts)?
        }
        (None, Some(dm)) => {
            let opts = d.load.clone().unwrap_or_else(|| dm.load_options());
            load_csv(&synthetic::bundled_path(dm), &opts)?
        }
        (None, None) => return Err(PipelineError::Config("dataset needs a domain or a path".into())),
    };
    let counts = d
        .split
        .or_else(|| domain.map(|dm| dm.split_counts()))
        .ok_or_else(|| PipelineError::Config("missing split counts".into()))?;
    let seed = d.split_seed.or_else(|| domain.map(|dm| dm.split_seed())).unwrap_or(0);
    Ok((raw.split(counts, seed)?, domain))
}

/// Partition the train split, fit the bootstrap model and compute difficulties.
pub fn prepare_from(config: &PipelineConfig, dataset: Dataset, domain: Option<Domain>) -> Result<Prepared, PipelineError> {
    let view = binarize(&dataset, config.dataset.bins)?;
    let mut train = dataset.indices(SplitTag::Train);
    train.shuffle(&mut seeding::rng(seeding::derive_str(config.seed, "partition")));
    let n_int = (config.dataset.interaction_fraction * train.len() as f64).round() as usize;
    let (a, b) = train.split_at(n_int.clamp(1, train.len().saturating_sub(1)));
    let mut interaction_rows = a.to_vec();
    let mut advisor_rows = b.to_vec();
    interaction_rows.sort_unstable();
    advisor_rows.sort_unstable();
    let bootstrap = fit_logistic(&dataset, &advisor_rows, &Default::default())?;
    let difficulty = bootstrap.predict_all(&dataset).into_iter().map(difficulty_proxy).collect();
    let mut groups = config.eval.groups.clone();
    for g in &mut groups {
        g.resolve(&dataset)?;
    }
    Ok(Prepared {
        val_rows: dataset.indices(SplitTag::Val),
        test_rows: dataset.indices(SplitTag::Test),
        dataset,
        domain,
        view,
        interaction_rows,
        advisor_rows,
        bootstrap,
        difficulty,
        groups,
    })
}

pub fn prepare(config: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let (dataset, domain) = load_dataset(config)?;
    prepare_from(config, dataset, domain)
}

/// The simulated expert described by the config, with noise-free acceptance.
pub fn build_profile(config: &PipelineConfig, prepared: &Prepared) -> Result<HumanProfile, PipelineError> {
    let h = &config.human;
    let mut profile = if let Some(path) = &h.profile {
        let mut p = HumanProfile::load_json(path)?;
        p.resolve(&prepared.dataset)?;
        p
    } else {
        match h.preset {
            HumanPreset::Standard => {
                let domain = prepared
                    .domain
                    .ok_or_else(|| PipelineError::Config("standard profiles need a domain".into()))?;
                presets::profile(domain, h.decision, h.confidence, &prepared.dataset, h.seed)?
            }
            HumanPreset::AsymmetricHeart => presets::asymmetric_heart(&prepared.dataset, h.seed)?,
        }
    };
    if let Some(adb) = &h.adb {
        profile.adb = adb.clone();
    }
    profile.adb.noise_level = 0.0;
    profile.validate()?;
    Ok(profile)
}

/// Everything one training repetition needs: interaction log, learned models,
/// candidate pool and the simulated training panel.
#[derive(Debug, Clone)]
pub struct Trial<'a> {
    pub prepared: &'a Prepared,
    pub profile: HumanProfile,
    /// The profile the advisor is evaluated against (acceptance noise applied).
    pub evaluated: HumanProfile,
    pub seed: u64,
    pub records: Vec<InteractionRecord>,
    pub discretion: DiscretionModel,
    pub outcome: TabularModel,
    /// `p(y = 1)` per dataset row from the outcome model.
    pub p1: Vec<f64>,
    pub pool: CandidatePool,
    pub panel: TrainingPanel,
}

pub fn trial_seed(master: u64, repetition: usize) -> u64 {
    seeding::derive(master, repetition as u64)
}

pub fn interaction_log(
    prepared: &Prepared,
    profile: &HumanProfile,
    rows: &[usize],
    seed: u64,
) -> Result<Vec<InteractionRecord>, PipelineError> {
    let bootstrap_p = prepared.bootstrap.predict_all(&prepared.dataset);
    Ok(collect_interactions(
        profile,
        &bootstrap_p,
        &prepared.dataset,
        rows,
        &prepared.difficulty,
        &mut seeding::rng(seed),
    )?)
}

impl<'a> Trial<'a> {
    pub fn build(
        config: &PipelineConfig,
        prepared: &'a Prepared,
        profile: &HumanProfile,
        repetition: usize,
    ) -> Result<Trial<'a>, PipelineError> {
        let seed = trial_seed(config.seed, repetition);
        let records = interaction_log(
            prepared,
            profile,
            &prepared.interaction_rows,
            seeding::derive_str(seed, "interactions"),
        )?;
        let discretion = fit_discretion(
            &records,
            &DiscretionParams {
                seed: seeding::derive_str(seed, "discretion"),
                ..config.estimators.discretion.clone()
            },
        )?;
        Self::with_discretion(config, prepared, profile, repetition, records, discretion)
    }

    /// Like [`Trial::build`] but with a given interaction log and discretion model.
    pub fn with_discretion(
        config: &PipelineConfig,
        prepared: &'a Prepared,
        profile: &HumanProfile,
        repetition: usize,
        records: Vec<InteractionRecord>,
        discretion: DiscretionModel,
    ) -> Result<Trial<'a>, PipelineError> {
        let seed = trial_seed(config.seed, repetition);
        let d = &prepared.dataset;
        let outcome = fit_outcome_model(
            d,
            &prepared.advisor_rows,
            config.estimators.outcome_folds,
            &config.estimators.outcome_grid,
            seeding::derive_str(seed, "outcome"),
        )?;
        let p1 = outcome.predict_all(d);
        let mut mining = config.trainer.mining();
        mining.seed = seeding::derive_str(seed, "mining");
        let pool = mine_candidates(&prepared.view, &prepared.advisor_rows, &d.labels(), &mining)?;
        let panel = TrainingPanel::simulate(
            profile,
            d,
            &prepared.advisor_rows,
            &prepared.difficulty,
            &p1,
            &mut seeding::rng(seeding::derive_str(seed, "panel")),
        )?;
        let mut evaluated = profile.clone();
        evaluated.adb.noise_level = config.human.noise_level;
        Ok(Trial {
            prepared,
            profile: profile.clone(),
            evaluated,
            seed,
            records,
            discretion,
            outcome,
            p1,
            pool,
            panel,
        })
    }

    /// Anneal one variant. The annealing seed depends on alpha and the
    /// repetition, never on the variant.
    pub fn train(&self, config: &PipelineConfig, variant: Variant, alpha: f64) -> Result<TrainResult, PipelineError> {
        let mut tc = config.trainer.clone();
        tc.variant = variant;
        tc.seed = seeding::derive(seeding::derive_str(self.seed, "anneal"), alpha.to_bits());
        let context = CostSpec { alpha, ..config.costs };
        Ok(train_variant(&tc, &self.panel, &self.pool, &context, &self.discretion, Some(&self.outcome))?)
    }

    /// Evaluate on the test split, behind the validation gate when enabled.
    pub fn evaluate(
        &self,
        config: &PipelineConfig,
        advisor: &Advisor,
        alpha: f64,
        gate: bool,
    ) -> Result<(Option<GateOutcome>, MetricsReport), PipelineError> {
        self.evaluate_against(config, advisor, alpha, gate, &self.evaluated)
    }

    pub fn evaluate_against(
        &self,
        config: &PipelineConfig,
        advisor: &Advisor,
        alpha: f64,
        gate: bool,
        human: &HumanProfile,
    ) -> Result<(Option<GateOutcome>, MetricsReport), PipelineError> {
        evaluate_policy(config, self.prepared, human, advisor, alpha, gate, self.seed)
    }
}

/// Evaluate on the test split, behind the validation gate when `gate` is set.
/// `trial_seed` fixes the human redraws, so variants see the same humans.
pub fn evaluate_policy(
    config: &PipelineConfig,
    prepared: &Prepared,
    human: &HumanProfile,
    advisor: &Advisor,
    alpha: f64,
    gate: bool,
    trial_seed: u64,
) -> Result<(Option<GateOutcome>, MetricsReport), PipelineError> {
    let p = prepared;
    let context = CostSpec { alpha, ..config.costs };
    let spec = EvalSpec {
        repetitions: config.eval.repetitions,
        groups: p.groups.clone(),
        seed: seeding::derive_str(trial_seed, "eval"),
    };
    if gate {
        let (g, r) = eval::evaluate_gated(
            advisor,
            &p.dataset,
            &p.val_rows,
            &p.test_rows,
            &p.difficulty,
            human,
            &context,
            &spec,
        )?;
        Ok((Some(g), r))
    } else {
        let r = eval::evaluate(advisor, &p.dataset, &p.test_rows, &p.difficulty, human, &context, &spec)?;
        Ok((None, r))
    }
}

/// Build every training repetition in parallel.
pub fn build_trials<'a>(
    config: &PipelineConfig,
    prepared: &'a Prepared,
    profile: &HumanProfile,
) -> Result<Vec<Trial<'a>>, PipelineError> {
    (0..config.eval.training_repetitions)
        .into_par_iter()
        .map(|rep| Trial::build(config, prepared, profile, rep))
        .collect()
}

/// Train and evaluate every (alpha, variant, repetition) of the config.
/// `on_trained` sees each trained advisor (e.g. to save it).
pub fn sweep(
    config: &PipelineConfig,
    trials: &[Trial],
    on_trained: impl Fn(f64, Variant, usize, &TrainResult) -> Result<(), PipelineError> + Sync,
) -> Result<SweepResult, PipelineError> {
    eval::run_grid(
        &config.alphas,
        &config.variants,
        trials.len(),
        config.workers,
        |_, alpha, variant, rep| {
            let t = &trials[rep];
            let trained = t.train(config, variant, alpha)?;
            on_trained(alpha, variant, rep, &trained)?;
            Ok(t.evaluate(config, &trained.advisor, alpha, config.eval.gate)?.1)
        },
    )
}
