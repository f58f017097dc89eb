use std::path::PathBuf;
use std::process::ExitCode;

use affectlens::config::{Overrides, RunConfig};
use affectlens::error::Error;
use affectlens::models::ModelKind;
use affectlens::pipeline::{run, Command};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affectlens", version, about = "Multi-label emotion analysis for tweets")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalise the corpus and write clean.jsonl.
    Preprocess(Common),
    /// Fit a classifier and write model.ckpt.
    Train(Common),
    /// Label the corpus with a trained model.
    Predict(Common),
    /// Score predictions against gold labels.
    Evaluate(Common),
    /// Weekly emotion shares and fixed-size bins.
    Trends(Common),
    /// Mine aspects per emotion and count subcategories.
    Aspects(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Abort on the first malformed record.
    #[arg(long)]
    strict: bool,
    /// Drop tweets whose normalised text repeats an earlier one.
    #[arg(long)]
    dedup: bool,
    /// cnn, lstm or head.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Relative to the config file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).map_err(|e| e.to_string())
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Preprocess(c) => (Command::Preprocess, c),
            Cmd::Train(c) => (Command::Train, c),
            Cmd::Predict(c) => (Command::Predict, c),
            Cmd::Evaluate(c) => (Command::Evaluate, c),
            Cmd::Trends(c) => (Command::Trends, c),
            Cmd::Aspects(c) => (Command::Aspects, c),
        }
    }
}

fn execute(command: Command, args: Common) -> Result<String, Error> {
    let overrides = Overrides {
        seed: args.seed,
        strict: args.strict,
        dedup: args.dedup,
        model: args.model,
        epochs: args.epochs,
        output_dir: args.output_dir,
    };
    let cfg = RunConfig::load(&args.config)?.resolve(&args.config, &overrides)?;
    log::info!("{command}: data root {}", cfg.data_root.display());
    Ok(run(command, &cfg)?.report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (command, args) = Cli::parse().command.split();
    match execute(command, args) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
