//! `jsattr`: ingest, transform, train, eval, similarity and cross-check.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jsattr::classifiers::Algorithm;
use jsattr::corpus::{Ratio, Variant};

use crate::config::{FileConfig, Flags, Settings, ROOT_ENV};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "jsattr", version, about = "LLM authorship attribution for JavaScript")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset file or directory [default: $LLM_NODEJS_ROOT].
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Program variant to use.
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Comma-separated model labels.
    #[arg(long, global = true, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Classifier: gboost, random_forest, linear_svm, logreg or knn.
    #[arg(long, global = true, value_parser = parse_algo)]
    algo: Option<Algorithm>,
    /// Seed for splits, subsamples, classifiers and pair sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; nothing is written elsewhere.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, syntax-check and deduplicate a corpus.
    Ingest,
    /// Minify or mangle every sample.
    Transform {
        #[arg(long, value_enum)]
        op: Op,
    },
    /// Split, fit and evaluate one classifier.
    Train {
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Re-evaluate a trained model on its validation split.
    Eval {
        /// Directory holding `model.json` and `vocabulary.json`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Intra- and inter-model similarity medians.
    Similarity {
        /// Models to compare [default: --classes].
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Cap on scored pairs per group.
        #[arg(long)]
        max_pairs: Option<usize>,
    },
    /// Evaluate a trained model on an independent corpus.
    CrossCheck {
        /// Directory holding `model.json` and `vocabulary.json`.
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct SplitArgs {
    /// Training share, e.g. 4/5 or 0.8.
    #[arg(long, value_parser = parse_ratio)]
    ratio: Option<Ratio>,
    /// Seeded subsample of at most this many samples per label.
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Op {
    Minify,
    Mangle,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: jsattr::Error| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: jsattr::Error| e.to_string())
}

fn parse_ratio(s: &str) -> Result<Ratio, String> {
    s.parse().map_err(|e: jsattr::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let (ratio, per_class) = match &cli.command {
        Command::Train { split } | Command::Eval { split, .. } => (split.ratio, split.per_class),
        _ => (None, None),
    };
    let flags = Flags {
        corpus: cli.common.corpus,
        variant: cli.common.variant,
        classes: cli.common.classes,
        algo: cli.common.algo,
        seed: cli.common.seed,
        out: cli.common.out,
        ratio,
        per_class,
    };
    let mut settings = Settings::resolve(file, flags, std::env::var_os(ROOT_ENV).map(PathBuf::from))?;
    match cli.command {
        Command::Ingest => commands::ingest(&settings),
        Command::Transform { op } => commands::transform(&settings, op),
        Command::Train { .. } => commands::train(&settings),
        Command::Eval { model, .. } => commands::eval(&settings, &model),
        Command::Similarity { models, max_pairs } => {
            if models.is_some() {
                settings.models = models;
            }
            if max_pairs.is_some() {
                settings.max_pairs = max_pairs;
            }
            commands::similarity(&settings)
        }
        Command::CrossCheck { model } => commands::cross_check(&settings, &model),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(move || run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal: unexpected panic");
            ExitCode::from(3)
        }
    }
}
