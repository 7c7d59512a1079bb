//! `leadsheet`: tokenize lead-sheet corpora, decode token streams, and run
//! the objective evaluation battery.

mod commands;
mod inputs;
mod provenance;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use inputs::InputArgs;

#[derive(Debug, Parser)]
#[command(name = "leadsheet", version, about = "Lead-sheet event codec and evaluation battery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a corpus into token files, a vocabulary sidecar and a summary.
    Tokenize(TokenizeArgs),
    /// Decode token files to Standard MIDI files.
    Detokenize(DetokenizeArgs),
    /// Per-piece and mean H1, H4, GS, CPI and structureness indicators.
    Report(ReportArgs),
    /// Fitness scape plot of a single piece (text matrix and PGM image).
    Scape(ScapeArgs),
    /// Continuation-prediction challenge.
    Challenge(ChallengeArgs),
    /// Train the n-gram baseline.
    TrainModel(TrainArgs),
    /// Sample token streams from a model.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct TokenizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DetokenizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for `.mid` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct StructureArgs {
    /// SSM threshold: similarities below it are replaced by the penalty.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    tau: f64,
    /// SSM penalty value.
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    delta: f64,
    /// Chroma frame rate in Hz.
    #[arg(long, default_value_t = 1.0)]
    frame_rate: f64,
    /// Scape-plot grid stride: `auto` (1 up to 400 frames, 2 above) or a number.
    #[arg(long, default_value = "auto")]
    stride: String,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    structure: StructureArgs,
    /// Structureness bands as `lower-upper` (seconds) or `lower-` for no upper bound.
    #[arg(long, value_delimiter = ',', default_value = "3-8,8-15,15-")]
    bands: Vec<String>,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one scape-plot PGM per piece here.
    #[arg(long)]
    pgm_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScapeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    structure: StructureArgs,
    /// Piece id to plot; required when the input holds several pieces.
    #[arg(long)]
    id: Option<String>,
    /// Output prefix; writes PREFIX.txt and PREFIX.pgm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Ngram,
    Uniform,
    Oracle,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Teacher,
    Sampled,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Ngram)]
    model: ModelKind,
    /// Saved n-gram model; without it the n-gram is trained on the input.
    #[arg(long)]
    model_path: Option<PathBuf>,
    /// Command of an external model speaking the line protocol (run by `sh -c`).
    #[arg(long)]
    model_command: Option<String>,
    /// n-gram order when training on the fly.
    #[arg(long, default_value_t = 5)]
    order: usize,
    /// Add-alpha smoothing when training on the fly.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Perturb the uniform model so that scores never tie.
    #[arg(long)]
    jitter: bool,
}

#[derive(Debug, Args)]
struct ChallengeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    questions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition on the candidate's own tokens or on model samples.
    #[arg(long, value_enum, default_value_t = Mode::Teacher)]
    mode: Mode,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 5)]
    order: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Model file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Training data when the n-gram is trained on the fly, or the oracle's pieces.
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Token file used as primer.
    #[arg(long)]
    primer: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    bars: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hard cap on tokens per piece.
    #[arg(long, default_value_t = 20_000)]
    max_tokens: usize,
    /// Also write a MIDI file per piece.
    #[arg(long)]
    midi: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Tokenize(a) => commands::tokenize(&a),
        Command::Detokenize(a) => commands::detokenize(&a),
        Command::Report(a) => commands::report(&a),
        Command::Scape(a) => commands::scape(&a),
        Command::Challenge(a) => commands::challenge(&a),
        Command::TrainModel(a) => commands::train_model(&a),
        Command::Generate(a) => commands::generate(&a),
    }
}
