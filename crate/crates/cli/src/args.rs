use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use georag_core::pipeline::DEFAULT_TOP_K;
use georag_core::retrieval::DEFAULT_DISTANCE_SCALE_KM;
use georag_core::{ParserMode, WeightPolicy};

#[derive(Debug, Parser)]
#[command(name = "georag", version, about = "Spatial question answering over POI corpora")]
pub struct Cli {
    /// File of `key = value` lines using the long flag names; command-line
    /// flags win over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a store from POI and gazetteer GeoJSON files
    Ingest(IngestArgs),
    /// Answer a question or DSL query
    Query(QueryArgs),
    /// Score the engine and the baselines on QA pairs
    Eval(EvalArgs),
    /// Show every stage of one query
    Explain(ExplainArgs),
    /// Write a generated benchmark city (POIs, gazetteer, QA pairs)
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    /// hash | service. Query-time commands default to what the store was built with.
    #[arg(long)]
    pub embedder: Option<String>,
    /// Embedding endpoint, e.g. https://host/v1/embeddings
    #[arg(long)]
    pub embed_url: Option<String>,
    #[arg(long)]
    pub embed_model: Option<String>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Directory caching service embeddings
    #[arg(long)]
    pub embed_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long, required = true)]
    pub store: PathBuf,
    #[command(flatten)]
    pub embed: EmbedderArgs,
    /// rule | llm | dsl
    #[arg(long, default_value = "rule")]
    pub parser: ParserMode,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_d: f64,
    /// heuristic | fixed:S,K | llm
    #[arg(long, default_value = "heuristic")]
    pub weights: WeightPolicy,
    /// Shorthand for --weights fixed:S,K; wins over --weights
    #[arg(long, value_name = "S,K")]
    pub lambda_fixed: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub topk: usize,
    /// Kilometers at which the sparse score halves
    #[arg(long, default_value_t = DEFAULT_DISTANCE_SCALE_KM)]
    pub distance_scale: f64,
    /// offline | http | replay:DIR | record:DIR (default: http when
    /// --gateway-url is set, offline otherwise)
    #[arg(long)]
    pub gateway: Option<String>,
    #[arg(long)]
    pub gateway_url: Option<String>,
    #[arg(long, default_value = "gpt-4o-mini")]
    pub gateway_model: String,
    /// Accepted for shared config files; query-time stages draw no random numbers
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnswerFormat {
    Table,
    Json,
    Geojson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct QuestionArgs {
    /// Natural-language question (or a DSL expression with --parser dsl)
    pub question: Option<String>,
    /// Structured query, e.g. 'point(-73.98,40.75) radius 500m category restaurant'
    #[arg(long, conflicts_with = "question")]
    pub dsl: Option<String>,
    /// Reference place: a POI name, a region name or "lon, lat". Repeatable.
    #[arg(long = "at", value_name = "REF")]
    pub at: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, required = true)]
    pub pois: PathBuf,
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    #[arg(long, required = true)]
    pub store: PathBuf,
    #[command(flatten)]
    pub embed: EmbedderArgs,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub input: QuestionArgs,
    #[arg(long, value_enum, default_value_t = AnswerFormat::Table)]
    pub format: AnswerFormat,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: QuestionArgs,
    #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
    pub format: TraceFormat,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// QA pairs, one JSON object per line
    #[arg(long, required = true)]
    pub qa: PathBuf,
    /// Comma-separated cutoffs
    #[arg(long, default_value = "1,3,5,10")]
    pub k: String,
    /// Comma-separated baselines (SD, TE, ST) or "none"
    #[arg(long, default_value = "SD,TE,ST")]
    pub baselines: String,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving pois.geojson, gazetteer.geojson and qa.jsonl
    #[arg(long, required = true)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = georag_core::synth::DEFAULT_NEIGHBORHOODS)]
    pub neighborhoods: usize,
}
