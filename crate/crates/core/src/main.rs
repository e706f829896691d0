use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selective_advisor::pipeline::{self, PipelineConfig, PipelineError};
use selective_advisor::trainer::Variant;

#[derive(Parser)]
#[command(name = "selective-advisor", version, about = "Train and evaluate selective rule-set advisors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline config (JSON). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// TR, TR_no_ADB, TR_no_Cost, TR_no_ADB_Cost or task_only.
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq)]
enum Command {
    /// Load, split and binarize the dataset and fit the bootstrap model.
    Prepare,
    /// Write the expert profile and one draw of their decisions.
    SimulateHuman,
    /// Log the expert's reactions to the bootstrap advisor.
    CollectInteractions,
    /// Fit the discretion model on the interaction log.
    FitDiscretion,
    /// Train one advisor bundle.
    Train,
    /// Evaluate trained bundles on the test split.
    Evaluate,
    /// Train and evaluate the whole alpha-by-variant grid.
    Sweep,
    /// Per-group advising tables for the configured expert.
    CaseStudy,
    /// Evaluate against increasingly noisy acceptance behavior.
    DegradeAdb,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut c = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if cli.command == Command::CaseStudy => PipelineConfig::heart_case_study(),
        None => PipelineConfig::default(),
    }
    .with_env();
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(o) = &cli.out {
        c.out = o.clone();
    }
    if let Some(w) = cli.workers {
        c.workers = Some(w);
    }
    if let Some(a) = cli.alpha {
        if cli.command != Command::Evaluate {
            c.alphas = vec![a];
        }
    }
    if let Some(v) = cli.variant {
        if matches!(cli.command, Command::Sweep | Command::CaseStudy | Command::DegradeAdb) {
            c.variants = vec![v];
        }
    }
    c.validate()?;
    Ok(c)
}

fn print<T: serde::Serialize>(value: &T) -> Result<(), PipelineError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let c = config(cli)?;
    if let Some(n) = c.workers {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Prepare => {
            let p = pipeline::cmd_prepare(&c)?;
            print(&p.dataset.split_sizes())
        }
        Command::SimulateHuman => {
            let (_, panel) = pipeline::cmd_simulate_human(&c)?;
            let expected = panel.draws.iter().map(|d| d.p_correct).sum::<f64>() / panel.len().max(1) as f64;
            print(&serde_json::json!({ "draws": panel.len(), "expected_accuracy": expected }))
        }
        Command::CollectInteractions => print(&serde_json::json!({ "records": pipeline::cmd_collect_interactions(&c)? })),
        Command::FitDiscretion => {
            let m = pipeline::cmd_fit_discretion(&c)?;
            print(&serde_json::json!({ "records": m.n_records, "holdout_auc": m.holdout_auc }))
        }
        Command::Train => {
            let variant = cli.variant.unwrap_or(Variant::Tr);
            print(&pipeline::cmd_train(&c, variant, c.alphas[0])?)
        }
        Command::Evaluate => {
            let reports = pipeline::cmd_evaluate(&c, cli.variant, cli.alpha)?;
            let brief: Vec<_> = reports
                .iter()
                .map(|(name, r)| {
                    serde_json::json!({
                        "advisor": name,
                        "value_added": r.overall.value_added.mean,
                        "se": r.overall.value_added.se,
                        "deployed": r.deployed,
                    })
                })
                .collect();
            print(&brief)
        }
        Command::Sweep => print(&pipeline::cmd_sweep(&c)?.curve()),
        Command::CaseStudy => print(&pipeline::cmd_case_study(&c)?.paired),
        Command::DegradeAdb => print(&pipeline::cmd_degrade_adb(&c)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
