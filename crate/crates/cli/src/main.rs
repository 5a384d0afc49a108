//! `cswitch`: corpus statistics, n-gram language modeling, code-switch
//! perplexity, WER scoring with bootstrap significance, and the
//! semi-supervised selection pipeline, as one command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod io;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cswitch",
    version,
    about = "Toolkit for code-switched ASR development: language models, \
             switch-aware metrics, WER scoring and semi-supervised data selection"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout instead of tables.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for parallel sections; 0 means machine parallelism.
    /// Results are independent of the thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-language duration, token and type statistics of a corpus.
    Stats(commands::stats::StatsArgs),
    /// Train a backoff n-gram language model and write it as ARPA.
    TrainLm(commands::train_lm::TrainLmArgs),
    /// Fit linear interpolation weights on a development text.
    Interpolate(commands::interpolate::InterpolateArgs),
    /// Perplexity of a text, optionally decomposed at code-switch points.
    Perplexity(commands::perplexity::PerplexityArgs),
    /// WER and code-switch accuracy of hypotheses against references.
    Score(commands::score::ScoreArgs),
    /// Paired bootstrap comparison of two systems' WER.
    Bootstrap(commands::bootstrap_cmd::BootstrapArgs),
    /// Confidence-threshold selection over a decode dump.
    Select(commands::select::SelectArgs),
    /// The multi-pass semi-supervised pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// The synthetic decoder: batch decoding or the line protocol.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run (or resume) a pipeline described by a JSON config.
    Run(commands::pipeline::PipelineRunArgs),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Decode utterances with every pair decoder into a decode dump.
    Decode(commands::simulate::SimDecodeArgs),
    /// Serve the external-decoder line protocol on stdin/stdout.
    Serve(commands::simulate::SimServeArgs),
}

/// Command outcomes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<cswitch_core::corpus::CorpusError> for CliError {
    fn from(e: cswitch_core::corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cswitch_core::ngram::NgramError> for CliError {
    fn from(e: cswitch_core::ngram::NgramError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cswitch_core::scoring::ScoringError> for CliError {
    fn from(e: cswitch_core::scoring::ScoringError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cswitch_core::semisup::SemisupError> for CliError {
    fn from(e: cswitch_core::semisup::SemisupError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Common output switches handed to every command.
#[derive(Args, Clone, Copy)]
pub struct OutputMode {
    pub json: bool,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mode = OutputMode { json: cli.json };
    match cli.command {
        Command::Stats(args) => commands::stats::run(args, mode),
        Command::TrainLm(args) => commands::train_lm::run(args, mode),
        Command::Interpolate(args) => commands::interpolate::run(args, mode),
        Command::Perplexity(args) => commands::perplexity::run(args, mode),
        Command::Score(args) => commands::score::run(args, mode),
        Command::Bootstrap(args) => commands::bootstrap_cmd::run(args, mode),
        Command::Select(args) => commands::select::run(args, mode),
        Command::Pipeline(PipelineCommand::Run(args)) => commands::pipeline::run(args, mode),
        Command::Simulate(SimulateCommand::Decode(args)) => commands::simulate::decode(args, mode),
        Command::Simulate(SimulateCommand::Serve(args)) => commands::simulate::serve(args, mode),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };

    let threads = cli.threads;
    let run = move || -> Result<(), CliError> {
        if threads == 0 {
            dispatch(cli)
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            pool.install(|| dispatch(cli))
        }
    };

    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("cswitch: {}", e.message());
            ExitCode::from(e.code())
        }
        Err(_) => {
            eprintln!("cswitch: internal error (panic)");
            ExitCode::from(3)
        }
    }
}
