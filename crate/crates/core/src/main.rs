use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sleuth::cli;
use sleuth::config::RunConfig;
use sleuth::Error;

#[derive(Parser)]
#[command(
    name = "sleuth",
    version,
    about = "Screenplay alignment, multimodal features, incremental sequence labeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines (# comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set seed=7
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set model=<MODEL>
    #[arg(long)]
    model: Option<String>,
    /// Shorthand for --set seed=<SEED>
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a screenplay text file into interchange sentences
    Parse(Common),
    /// Align one episode's dialog to SRT captions and time-stamp everything
    Align(Common),
    /// Build per-sentence feature caches from corpus, audio, and visual data
    Featurize(Common),
    /// Generate a synthetic dataset in the real pipeline's formats
    Synth(Common),
    /// Train the selected model over one cross-validation fold
    Train(Common),
    /// Evaluate a model and emit traces plus metric reports
    Eval(Common),
    /// Regenerate metric reports from persisted traces
    Report(Common),
}

fn build_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(&common.set)?;
    if let Some(model) = &common.model {
        cfg.set("model", model)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    Ok(cfg)
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    let (common, action): (&Common, fn(&RunConfig) -> Result<(), Error>) = match &cli.command {
        Command::Parse(c) => (c, cli::cmd_parse),
        Command::Align(c) => (c, cli::cmd_align),
        Command::Featurize(c) => (c, cli::cmd_featurize),
        Command::Synth(c) => (c, cli::cmd_synth),
        Command::Train(c) => (c, cli::cmd_train),
        Command::Eval(c) => (c, cli::cmd_eval),
        Command::Report(c) => (c, cli::cmd_report),
    };
    let cfg = build_config(common)?;
    action(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
