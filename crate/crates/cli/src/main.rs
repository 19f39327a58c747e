//! tokenforge: command-line driver for the codec, pipeline, reward
//! optimization, augmentation, and evaluation toolkit.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use commands::CliError;

/// Default seed when neither `--seed` nor `TOKENFORGE_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

/// Environment variable consulted for the seed.
pub const SEED_ENV_VAR: &str = tokenforge_core::pipeline::SEED_ENV_VAR;

#[derive(Parser)]
#[command(name = "tokenforge", version, about = "Speech-token codec, corpus pipeline, reward optimization, augmentation, and evaluation")]
struct Cli {
    /// Config file for the chosen subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides TOKENFORGE_SEED and the default 42
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for per-utterance work
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Increase log output on stderr
    #[arg(long, short, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize feature vectors into speech tokens (or decode tokens back)
    Tokenize(commands::tokenize::TokenizeArgs),
    /// Run the corpus-production pipeline over a manifest
    Pipeline(commands::pipeline::PipelineArgs),
    /// Optimize a toy token policy against a differentiable reward
    Diffro(commands::diffro::DiffroArgs),
    /// Pronunciation-inpainting augmentation over a JSONL corpus
    Augment(commands::augment::AugmentArgs),
    /// Score hypotheses and emit a per-language report
    Eval(commands::eval_cmd::EvalArgs),
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(value) => value
            .parse::<u64>()
            .map_err(|e| CliError::config(format!("bad {SEED_ENV_VAR}: {e}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let seed_explicit = cli.seed.is_some();
    let seed = match resolve_seed(cli.seed) {
        Ok(seed) => seed,
        Err(e) => return e.report(),
    };
    let ctx = commands::Context {
        config: cli.config,
        seed,
        seed_explicit,
        jobs: cli.jobs.max(1),
        verbose: cli.verbose,
    };

    let result = match cli.command {
        Command::Tokenize(args) => commands::tokenize::run(&ctx, args),
        Command::Pipeline(args) => commands::pipeline::run(&ctx, args),
        Command::Diffro(args) => commands::diffro::run(&ctx, args),
        Command::Augment(args) => commands::augment::run(&ctx, args),
        Command::Eval(args) => commands::eval_cmd::run(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
