//! `recover`: extract requirements from conversation transcripts.

mod config;
mod error;
mod evaluate;
mod pipeline;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{ExitKind, Failure};

#[derive(Parser)]
#[command(name = "recover", version, about = "Requirements extraction from conversation transcripts")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a turn classifier from labeled sentences.
    Train(train::TrainArgs),
    /// Label each turn of a transcript as Req or NonReq.
    Classify(pipeline::ClassifyArgs),
    /// Filter short turns and merge questions with their answers.
    Process(pipeline::ProcessArgs),
    /// Generate requirements for processed units.
    Generate(pipeline::GenerateArgs),
    /// Classify, process, generate and aggregate in one go.
    Run(pipeline::RunArgs),
    /// Evaluation reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Score candidate text against references with BLEU, ROUGE and METEOR.
    Metrics(evaluate::MetricsArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Confusion analysis of predicted labels against an oracle.
    Classify(evaluate::EvalClassifyArgs),
    /// Turn-level similarity against multiple expert references.
    Turns(evaluate::EvalTurnsArgs),
    /// Corpus-level comparison of two requirement sets.
    Corpus(evaluate::EvalCorpusArgs),
}

/// Generation backend flags shared by `generate` and `run`.
#[derive(Args, Clone, Default)]
pub struct BackendArgs {
    /// Answer from a mock fixture instead of calling a model server.
    #[arg(long, value_name = "FIXTURE")]
    pub mock: Option<PathBuf>,
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub model_name: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub retries: Option<u32>,
    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Units generated concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Merge requirements with identical normalized text.
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Plain,
}

impl From<FormatArg> for recover_core::TranscriptFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => recover_core::TranscriptFormat::Jsonl,
            FormatArg::Plain => recover_core::TranscriptFormat::Plain,
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train(a) => train::run(a),
        Command::Classify(a) => pipeline::classify(a),
        Command::Process(a) => pipeline::process(a),
        Command::Generate(a) => pipeline::generate(a),
        Command::Run(a) => pipeline::run(a),
        Command::Eval(EvalCommand::Classify(a)) => evaluate::classify(a),
        Command::Eval(EvalCommand::Turns(a)) => evaluate::turns(a),
        Command::Eval(EvalCommand::Corpus(a)) => evaluate::corpus(a),
        Command::Metrics(a) => evaluate::metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match std::panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.kind as u8)
        }
        Err(_) => ExitCode::from(ExitKind::Internal as u8),
    }
}
