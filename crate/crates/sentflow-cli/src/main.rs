//! Command-line driver for the sentence-flow toolkit: corpus generation,
//! flow training, disentanglement evaluation, latent interpolation,
//! cluster augmentation, and PCA projection. Every artifact is a pure
//! function of the flags, so identical invocations rewrite identical bytes.

mod augment;
mod common;
mod eval;
mod gen_corpus;
mod interpolate;
mod project;
mod svg;
mod train;

use clap::{Parser, Subcommand};
use sentflow::Error;

#[derive(Parser)]
#[command(
    name = "sentflow",
    version,
    about = "Invertible flows over sentence embeddings: train, evaluate, explore"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic role-labelled corpus as JSONL.
    GenCorpus(gen_corpus::GenCorpusArgs),
    /// Train a flow on corpus embeddings and write a checkpoint.
    Train(train::TrainArgs),
    /// Score trained flows against the raw-embedding baseline.
    Eval(eval::EvalArgs),
    /// Decode the latent line between two sentences.
    Interpolate(interpolate::InterpolateArgs),
    /// Synthesise novel labelled sentences inside one cluster.
    Augment(augment::AugmentArgs),
    /// Project embeddings onto principal components, with a scatter plot.
    Project(project::ProjectArgs),
}

/// Exit codes: 2 configuration, 3 I/O, 4 numeric, 5 violated invariant.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidInput(_)
        | Error::UnknownSymbol { .. }
        | Error::Parse { .. }
        | Error::Version { .. } => 2,
        Error::Io(_) => 3,
        Error::Numeric(_) | Error::Degenerate(_) => 4,
        Error::InvalidState(_) | Error::Invariant(_) => 5,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCorpus(args) => gen_corpus::run(args),
        Command::Train(args) => train::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Interpolate(args) => interpolate::run(args),
        Command::Augment(args) => augment::run(args),
        Command::Project(args) => project::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
