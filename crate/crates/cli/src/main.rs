//! `bench`: command-line front end for the screening-model benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bench_core::hap::{default_ratio_grid, PenaltyWeights, DEFAULT_W_FN, DEFAULT_W_FP};
use bench_core::ingest::CohortId;
use bench_core::modelhost::{ModelKind, ModelSpec};
use bench_core::pipeline::{
    analyze_confusions, emit_reports, infer_cohort, perturb_single, run_benchmark, validate_data,
    ConfusionInput, LambdaChoice, RunConfig,
};
use bench_core::robustness::Protocol;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Four-axis benchmark for AQ-10 screening classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full benchmark described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// HAP, SNR curve and weight sweep from per-fold confusion counts.
    Hap {
        /// JSON object: model id -> list of folds, each [tp, tn, fp, fn].
        #[arg(long)]
        confusions: PathBuf,
        /// Penalty weight, or `auto` for the SNR-optimal value.
        #[arg(long, default_value = "1.0")]
        lambda: LambdaChoice,
        /// Also sweep w_fn / w_fp over [1, 20] and report Kendall's W.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = DEFAULT_W_FP)]
        w_fp: f64,
        #[arg(long, default_value_t = DEFAULT_W_FN)]
        w_fn: f64,
    },
    /// Accuracy change of one model under a single perturbation.
    Perturb {
        #[arg(long)]
        data: PathBuf,
        /// Model spec JSON file, or a native kind such as `native_logreg`.
        #[arg(long)]
        model: String,
        /// flip | noise | removal
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        level: f64,
        /// Inferred from the file name when omitted.
        #[arg(long)]
        cohort: Option<CohortId>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Load, deduplicate and summarize a cohort file.
    Validate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        cohort: Option<CohortId>,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cohort_for(data: &Path, explicit: Option<CohortId>) -> Result<CohortId> {
    match explicit.or_else(|| infer_cohort(data)) {
        Some(c) => Ok(c),
        None => bail!(
            "cannot infer cohort from `{}`; pass --cohort child|adolescent|adult",
            data.display()
        ),
    }
}

fn model_spec(arg: &str) -> Result<ModelSpec> {
    if let Some(kind) = ModelKind::parse(arg) {
        if kind == ModelKind::External {
            bail!("external models need a spec file with a command");
        }
        return Ok(ModelSpec::native(arg, kind));
    }
    let text =
        std::fs::read_to_string(arg).with_context(|| format!("reading model spec `{arg}`"))?;
    let spec: ModelSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing `{arg}`"))?;
    spec.validate()?;
    Ok(spec)
}

/// Returns the number of failed cells.
fn run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<usize> {
    let mut cfg =
        RunConfig::load(config).with_context(|| format!("config `{}`", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let report = run_benchmark(&cfg)?;
    let files = emit_reports(&report, &cfg.output_dir)?;
    for f in &files {
        println!("{}", f.display());
    }
    for r in &report.recommendations {
        println!(
            "{:<11} {:<8} {}{}",
            r.cohort.as_str(),
            r.setting.as_str(),
            r.model_id,
            r.warning
                .as_deref()
                .map(|w| format!("  ({w})"))
                .unwrap_or_default()
        );
    }
    Ok(report.failed_records())
}

fn execute(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => run(&config, seed, out, jobs),
        Command::Hap {
            confusions,
            lambda,
            sweep,
            w_fp,
            w_fn,
        } => {
            let text = std::fs::read_to_string(&confusions)
                .with_context(|| format!("reading `{}`", confusions.display()))?;
            let input: ConfusionInput = serde_json::from_str(&text)?;
            let ratios = default_ratio_grid();
            let analysis = analyze_confusions(
                &input,
                PenaltyWeights::new(w_fp, w_fn)?,
                lambda,
                sweep.then_some(ratios.as_slice()),
            )?;
            print_json(&analysis)?;
            Ok(0)
        }
        Command::Perturb {
            data,
            model,
            protocol,
            level,
            cohort,
            seed,
        } => {
            let Some(protocol) = Protocol::parse(&protocol) else {
                bail!("unknown protocol `{protocol}` (expected flip, noise or removal)");
            };
            let cohort = cohort_for(&data, cohort)?;
            let spec = model_spec(&model)?;
            print_json(&perturb_single(
                &data, cohort, &spec, protocol, level, seed,
            )?)?;
            Ok(0)
        }
        Command::Validate { data, cohort } => {
            let cohort = cohort_for(&data, cohort)?;
            print_json(&validate_data(&data, cohort)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} evaluation(s) failed; see report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
