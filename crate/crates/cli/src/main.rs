//! `lcp`: train, apply and score lexical complexity models from the shell.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcp_core::eval::ReportFormat;

use crate::config::{RunArgs, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lcp", version, about = "Lexical complexity prediction with feature-engineered random forests")]
struct Cli {
    /// Run configuration file (sectioned key = value)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the train/dev split and the forest (overrides [forest] seed) [default: 0]
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core
    #[arg(long, global = true, value_name = "INT", default_value_t = 0)]
    threads: usize,
    /// Only print errors
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on the training portion and print its scores
    Train(TrainArgs),
    /// Score a dataset with a trained model
    Predict(PredictArgs),
    /// Compare a prediction file against gold complexities
    Evaluate(EvaluateArgs),
    /// Baseline-plus-one feature ablation, or the preset model comparison
    Ablate(AblateArgs),
    /// Lexicon coverage over the distinct training targets
    Coverage(CoverageArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the model; `<PATH>.schema.json` and `<PATH>.manifest` are written next to it
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Trained model file
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Schema sidecar [default: <MODEL>.schema.json]
    #[arg(long, value_name = "PATH")]
    schema: Option<PathBuf>,
    /// Dataset TSV to score (overrides [data] test)
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output TSV [default: stdout]
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Digits after the decimal point
    #[arg(long, value_name = "N", default_value_t = 3)]
    decimals: usize,
    /// Replacement lexicon as NAME=PATH, repeatable
    #[arg(long = "lexicon", value_name = "NAME=PATH")]
    lexicons: Vec<String>,
    /// Replacement POS tag lexicon
    #[arg(long, value_name = "PATH")]
    pos_lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Prediction TSV with header `id<TAB>prediction`
    #[arg(long, value_name = "PATH")]
    predictions: PathBuf,
    /// Dataset TSV carrying gold complexities
    #[arg(long, value_name = "PATH")]
    gold: PathBuf,
    /// Report file [default: stdout]
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Report format: markdown or csv
    #[arg(long, value_name = "FORMAT", default_value = "markdown", value_parser = parse_format)]
    format: ReportFormat,
    /// Row label in the report
    #[arg(long, value_name = "TEXT", default_value = "Predictions")]
    label: String,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated families to add to the baseline one at a time [default: every family outside the baseline]
    #[arg(long, value_name = "LIST", conflicts_with = "models")]
    candidates: Option<String>,
    /// Compare the baseline, model1, model2 and lcp_rit presets instead
    #[arg(long)]
    models: bool,
    /// Report file [default: stdout]
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Report format: markdown or csv
    #[arg(long, value_name = "FORMAT", default_value = "markdown", value_parser = parse_format)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Only this registry entry [default: every loaded lexicon]
    #[arg(long = "name", value_name = "NAME")]
    name: Option<String>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: lcp_core::eval::EvalError| e.to_string())
}

fn base_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.forest.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    let mut cfg = base_config(&cli)?;
    let quiet = cli.quiet;
    match cli.command {
        Command::Train(a) => {
            a.run.apply(&mut cfg)?;
            commands::train(&cfg, &a.model, quiet)
        }
        Command::Predict(a) => {
            let overrides = RunArgs { lexicons: a.lexicons, pos_lexicon: a.pos_lexicon, ..Default::default() };
            overrides.apply(&mut cfg)?;
            let opts = commands::PredictOptions {
                model: a.model,
                schema: a.schema,
                input: a.input,
                output: a.output,
                decimals: a.decimals,
            };
            commands::predict(&cfg, &opts)
        }
        Command::Evaluate(a) => commands::evaluate(&a.predictions, &a.gold, a.report.as_deref(), a.format, &a.label),
        Command::Ablate(a) => {
            a.run.apply(&mut cfg)?;
            let mode = if a.models {
                commands::AblateMode::Models
            } else {
                commands::AblateMode::Candidates(a.candidates)
            };
            commands::ablate(&cfg, mode, a.report.as_deref(), a.format)
        }
        Command::Coverage(a) => {
            a.run.apply(&mut cfg)?;
            commands::coverage(&cfg, a.name.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
