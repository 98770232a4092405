mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyadscreen::corpus::{Budget, SpeakerConfig};
use dyadscreen::eval::ModelKind;

/// Depression screening from diarized clinician-patient transcripts.
#[derive(Debug, Parser)]
#[command(name = "dyadscreen", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute lexicon features for one speaker configuration and budget.
    Featurize(FeaturizeArgs),
    /// Chunk manifests for external embedders.
    #[command(subcommand)]
    Chunks(ChunksCommand),
    /// Mean-pool chunk vectors into a document feature table.
    Pool(PoolArgs),
    /// Cross-validate logistic regression on a feature table.
    Eval(EvalArgs),
    /// Run the model x speaker configuration x token budget grid.
    Ablate(AblateArgs),
    /// Group-difference tests and coefficient summaries.
    Stats(StatsArgs),
    /// Score documents with a chat-completion endpoint.
    Zeroshot(ZeroshotArgs),
    /// Evaluate a zero-shot score file on the full dataset.
    ZeroshotEval(ZeroshotEvalArgs),
    /// Generate a synthetic corpus with known effects.
    Synth(SynthArgs),
    /// Re-render report files from a saved report.json.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Transcript corpus (JSONL, one encounter per line).
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct LexiconArg {
    /// Lexicon in .dic format; defaults to the bundled demo lexicon.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub lexicon: LexiconArg,
    /// Speaker configuration: patient, provider or combined.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Token budget: a positive integer or `full`.
    #[arg(long, default_value = "full")]
    pub budget: Budget,
    /// Output feature table (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ChunksCommand {
    /// Write the chunk manifest (JSONL) for one speaker configuration.
    Export(ChunksExportArgs),
    /// Embed a manifest with the deterministic hash embedder (for testing).
    PseudoEmbed(PseudoEmbedArgs),
}

#[derive(Debug, Args)]
pub struct ChunksExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Speaker configuration: patient, provider or combined.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Tokens per chunk.
    #[arg(long, default_value_t = dyadscreen::embedpool::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    /// Output manifest (JSONL).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PseudoEmbedArgs {
    /// Chunk manifest (JSONL).
    #[arg(long)]
    pub chunks: PathBuf,
    /// Vector dimension.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Hash seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output vector sidecar (JSONL).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Chunk manifest the vectors were computed from.
    #[arg(long)]
    pub chunks: PathBuf,
    /// Vector sidecar (JSONL of encounter_id, chunk_index, vector).
    #[arg(long)]
    pub vectors: PathBuf,
    /// Speaker configuration the manifest was exported for.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Token budget; must be a multiple of the chunk size or `full`.
    #[arg(long, default_value = "full")]
    pub budget: Budget,
    /// Tokens per chunk used at export.
    #[arg(long, default_value_t = dyadscreen::embedpool::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    /// Output feature table (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Number of stratified folds.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Fold assignment seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inverse L2 regularization strength.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Optimizer gradient tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Optimizer iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Feature table (CSV from `featurize` or `pool`).
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Model label for the report row.
    #[arg(long, default_value = "lexicon-lr")]
    pub model: ModelKind,
    /// Speaker configuration label for the report row.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Token budget label for the report row.
    #[arg(long, default_value = "full")]
    pub budget: Budget,
    /// Output directory for report.md, report.json, summary.csv and
    /// per_fold.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also fit on all rows and save the model (JSON).
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub lexicon: LexiconArg,
    /// Models, comma separated: lexicon-lr, embedding-lr, zero-shot.
    #[arg(long, value_delimiter = ',', default_value = "lexicon-lr")]
    pub models: Vec<ModelKind>,
    /// Speaker configurations, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "patient,provider,combined")]
    pub configs: Vec<SpeakerConfig>,
    /// Token budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512,full")]
    pub budgets: Vec<Budget>,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Directory with chunks-<config>.jsonl and vectors-<config>.jsonl
    /// (required for embedding-lr).
    #[arg(long)]
    pub embeddings_dir: Option<PathBuf>,
    /// Tokens per chunk used at export.
    #[arg(long, default_value_t = dyadscreen::embedpool::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    /// Directory with scores-<config>-<budget>.csv (required for zero-shot).
    #[arg(long)]
    pub scores_dir: Option<PathBuf>,
    /// Output directory for report.md, report.json, summary.csv,
    /// per_fold.csv and curve.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub lexicon: LexiconArg,
    /// Speaker configurations to test, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "patient,provider,combined")]
    pub configs: Vec<SpeakerConfig>,
    /// Output group-difference table (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Feature table whose cross-validated coefficients are summarized.
    #[arg(long, requires = "coefficients_out")]
    pub features: Option<PathBuf>,
    /// Output coefficient summary (CSV).
    #[arg(long, requires = "features")]
    pub coefficients_out: Option<PathBuf>,
    /// Number of coefficients to keep, by absolute mean.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct ZeroshotArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Speaker configuration: patient, provider or combined.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Token budget: a positive integer or `full`.
    #[arg(long, default_value = "full")]
    pub budget: Budget,
    /// Chat-completions URL. The bearer token is read from DYADSCREEN_API_KEY.
    #[arg(long)]
    pub url: String,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: String,
    /// Extra attempts per document after the first.
    #[arg(long, default_value_t = 3)]
    pub retries: usize,
    /// Concurrent requests.
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Base retry backoff in milliseconds.
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    /// Output score file (CSV: encounter_id,score,status).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZeroshotEvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Score file (CSV: encounter_id,score,status).
    #[arg(long)]
    pub scores: PathBuf,
    /// Speaker configuration the scores were computed for.
    #[arg(long, default_value = "combined")]
    pub config: SpeakerConfig,
    /// Token budget the scores were computed for.
    #[arg(long, default_value = "full")]
    pub budget: Budget,
    /// Output directory for report.md, report.json, summary.csv and
    /// per_fold.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec (JSON); defaults to the demo spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Encounters to generate when no spec is given.
    #[arg(long, default_value_t = 1108, conflicts_with = "spec")]
    pub n: usize,
    /// Seed; overrides the spec's seed when given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output corpus (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Output ground truth (JSON).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write the resolved spec (JSON) here.
    #[arg(long)]
    pub write_spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `ablate`, `eval` or `zeroshot-eval`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for report.md, summary.csv, per_fold.csv and
    /// curve.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
