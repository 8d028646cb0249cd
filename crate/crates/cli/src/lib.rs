//! The `lexswap` pipeline: lexicon preparation, clustering, intervention,
//! composition and statistics, each replayable from its manifest.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lexswap_core::compose::Strategy;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "lexswap", version, about = "Dictionary-driven lexical interventions for bilingual pretraining corpora")]
pub struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, validate and optionally subsample a bilingual lexicon.
    Lexicon(LexiconArgs),
    /// Fit k-means over document embeddings and report the domain cluster.
    Cluster(ClusterArgs),
    /// Apply lexical replacements to a corpus.
    Intervene(InterveneArgs),
    /// Interleave HR and LR documents up to a token budget.
    Compose(ComposeArgs),
    /// Coverage, replacement report and target-vs-actual curve.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Input TSV (`source<TAB>translation`).
    #[arg(long = "in", alias = "lexicon")]
    pub input: Option<PathBuf>,
    /// Canonical lexicon output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub target_lang: Option<String>,
    /// Keep this fraction of entries, in (0, 1].
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Embedding file of the corpus to cluster.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Id sidecar; defaults to `<embeddings>.ids`.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Benchmark embeddings used to pick the domain cluster.
    #[arg(long)]
    pub benchmark_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub benchmark_ids: Option<PathBuf>,
    /// Per-document token counts (one per line, in embedding row order).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub n_init: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[arg(long)]
    pub hr_corpus: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub replacement_ratio: Option<f64>,
    #[arg(long)]
    pub mix_ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSONL with `id` and `domain` per document (e.g. `assignments.jsonl`
    /// from `cluster`). Without it, documents' own `domain` fields are used.
    #[arg(long)]
    pub domain_tags: Option<PathBuf>,
    #[arg(long)]
    pub shard_docs: Option<usize>,
    /// Do not write `replacements.jsonl`.
    #[arg(long)]
    pub no_sidecar: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub hr_corpus: Option<PathBuf>,
    #[arg(long)]
    pub lr_corpus: Option<PathBuf>,
    #[arg(long)]
    pub hr_share: Option<f64>,
    #[arg(long)]
    pub token_budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shard_docs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub hr_corpus: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Comma-separated ascending targets; defaults to 0, 0.1, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: lexswap_core::Error| e.to_string())
}

/// Loads the configuration file (if any) and runs the command.
pub fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    config.validate()?;
    match cli.command {
        Command::Lexicon(args) => commands::lexicon::run(args, config),
        Command::Cluster(args) => commands::cluster::run(args, config),
        Command::Intervene(args) => commands::intervene::run(args, config),
        Command::Compose(args) => commands::compose::run(args, config),
        Command::Stats(args) => commands::stats::run(args, config),
    }
}

pub(crate) fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}
