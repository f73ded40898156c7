//! Command-line interface: dataset generation, model training, encoding,
//! surrogate retrieval, property classification, sweeps, and analysis
//! exports. All randomness flows from explicit `--seed` flags; identical
//! invocations produce byte-identical artifacts.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numeric
//! divergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doe2vec::error::Error;

use config::Config;

#[derive(Parser)]
#[command(
    name = "doe2vec",
    about = "Latent representations of optimization landscapes from DoE samples",
    version
)]
struct Cli {
    /// Plain-text `key = value` configuration; flags override file entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Force serial execution
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random-function suite and its normalized landscape dataset
    Generate(GenerateArgs),
    /// Train an AE or VAE on a landscape dataset
    Train(TrainArgs),
    /// Encode dataset records to latent vectors (CSV)
    Encode(CodecArgs),
    /// Reconstruct dataset records and report per-record error (CSV)
    Reconstruct(CodecArgs),
    /// Build a latent-keyed archive from a function suite
    Archive(ArchiveArgs),
    /// Rank archive entries nearest to a query landscape
    Nearest(NearestArgs),
    /// Benchmark property classification (macro F1 report)
    Classify(ClassifyArgs),
    /// Latent-size x KL-weight sweep
    Sweep(SweepArgs),
    /// 2-d MDS projection of benchmark feature vectors
    Mds(MdsArgs),
    /// Decode a latent traversal around a starting point
    Traverse(TraverseArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of functions to generate
    #[arg(long)]
    count: Option<usize>,
    /// Input dimension of the generated functions
    #[arg(long)]
    dim: Option<usize>,
    /// Base seed; function i derives its own seed as seed + i
    #[arg(long)]
    seed: Option<u64>,
    /// Design exponent: the DoE has 2^m points
    #[arg(long)]
    m: Option<usize>,
    /// Output path prefix; writes <out>.suite and <out>.d2vd
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated lower bounds (single value broadcasts)
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<String>,
    /// Comma-separated upper bounds (single value broadcasts)
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<String>,
    /// Maximum expression-tree depth
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Landscape dataset file
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model kind: ae or vae
    #[arg(long)]
    kind: Option<String>,
    /// Latent size (must satisfy ls < n/4)
    #[arg(long)]
    latent: Option<usize>,
    /// KL loss weight
    #[arg(long = "kl-weight")]
    kl_weight: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of records held out for validation
    #[arg(long = "val-fraction")]
    val_fraction: Option<f64>,
    /// Output model file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CodecArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ArchiveArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Function suite file
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<String>,
}

#[derive(Args)]
pub struct NearestArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Query file: one raw objective value per line
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(short, long)]
    k: Option<usize>,
}

#[derive(Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Task: multimodal, global_structure, or funnel
    #[arg(long)]
    task: Option<String>,
    /// Featureset: ae, vae, ela, or ela+vae
    #[arg(long)]
    featureset: Option<String>,
    /// Trained model file (required for latent featuresets)
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    /// Number of repetition seeds
    #[arg(long)]
    seeds: Option<usize>,
    /// Base seed for the repetitions
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated latent sizes
    #[arg(long = "latent-sizes")]
    latent_sizes: Option<String>,
    /// Comma-separated KL weights
    #[arg(long = "kl-weights")]
    kl_weights: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "val-fraction")]
    val_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct MdsArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    featureset: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    /// Inclusive instance range, e.g. 1..100
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TraverseArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Query landscape to encode as the starting point (origin when omitted)
    #[arg(long)]
    query: Option<PathBuf>,
    /// Latent index to vary (all indices when omitted)
    #[arg(long)]
    index: Option<usize>,
    #[arg(long = "delta-min", allow_negative_numbers = true)]
    delta_min: Option<f64>,
    #[arg(long = "delta-max", allow_negative_numbers = true)]
    delta_max: Option<f64>,
    #[arg(long = "delta-step")]
    delta_step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => 4,
        Error::FormatError { .. }
        | Error::Corruption { .. }
        | Error::UnsupportedVersion { .. }
        | Error::ParseError { .. }
        | Error::Incompatibility { .. }
        | Error::NonFiniteInput { .. }
        | Error::CacheMismatch
        | Error::Convergence { .. }
        | Error::GeneratorExhausted { .. }
        | Error::DimensionMismatch { .. }
        | Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let cfg = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code_for(&e));
            }
        },
        None => Config::default(),
    };

    let result = match &cli.command {
        Command::Generate(args) => commands::generate(args, &cfg),
        Command::Train(args) => commands::train(args, &cfg),
        Command::Encode(args) => commands::encode(args, &cfg),
        Command::Reconstruct(args) => commands::reconstruct(args, &cfg),
        Command::Archive(args) => commands::archive(args, &cfg),
        Command::Nearest(args) => commands::nearest(args, &cfg),
        Command::Classify(args) => commands::classify(args, &cfg),
        Command::Sweep(args) => commands::sweep(args, &cfg),
        Command::Mds(args) => commands::mds(args, &cfg),
        Command::Traverse(args) => commands::traverse(args, &cfg),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
