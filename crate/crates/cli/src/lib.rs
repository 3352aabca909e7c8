//! The `georag` command line, callable in-process through [`run`].

pub mod args;
pub mod render;
pub mod settings;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{CommandFactory, FromArgMatches};
use georag_core::corpus::{self, gazetteer_to_geojson, pois_to_geojson, read_qa_pairs, CorpusError};
use georag_core::eval::EvalError;
use georag_core::llm::{ChatBackend, FixtureChat, HttpChat, HttpChatConfig, OfflineChat};
use georag_core::pipeline::{answers_feasible, to_geojson};
use georag_core::retrieval::{ServiceConfig, ServiceEmbedder, DEFAULT_HASH_DIM};
use georag_core::{
    evaluate, Baseline, Corpus, Embedder, Engine, FusionWeights, Gateway, HashEmbedder, LexiconMasker, Manifest,
    MaskingView, ParserMode, PipelineConfig, PipelineError, QueryInput, System, WeightPolicy,
};

use args::{AnswerFormat, Cli, Command, EmbedderArgs, EngineArgs, QuestionArgs, ReportFormat, TraceFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EXTERNAL: i32 = 3;

/// Bearer token for the embedding service.
pub const EMBED_TOKEN_ENV: &str = "GEORAG_EMBED_TOKEN";

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or queries.
    Usage(String),
    /// An external service failed and nothing could stand in for it.
    External(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::External(_) => EXIT_EXTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::External(m) => m,
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Embed(_) => Self::External(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_external() {
            Self::External(e.to_string())
        } else {
            Self::Usage(e.to_string())
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let external = match &e {
            EvalError::Pair { source, .. } => source.is_external(),
            EvalError::Retrieval(r) => matches!(r, georag_core::retrieval::RetrievalError::Embed(_)),
            _ => false,
        };
        if external {
            Self::External(e.to_string())
        } else {
            Self::Usage(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_usage(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| usage(format!("{}: {e}", path.display()))
}

/// Runs one command line and returns the process exit code.
pub fn run(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let root = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let args = match settings::config_path(&args) {
        Some(path) => match settings::read(Path::new(&path)).and_then(|e| settings::splice(&root, args, &e)) {
            Ok(a) => a,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        },
        None => args,
    };
    let cli = match root.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(&a, out),
        Command::Query(a) => cmd_query(&a.input, a.format, &a.engine, out),
        Command::Explain(a) => cmd_explain(&a.input, a.format, &a.engine, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn service_embedder(a: &EmbedderArgs, model: String, dimension: usize) -> Result<ServiceEmbedder, Failure> {
    let url = a
        .embed_url
        .clone()
        .ok_or_else(|| usage("the service embedder needs --embed-url"))?;
    Ok(ServiceEmbedder::new(ServiceConfig {
        url,
        model,
        api_key: std::env::var(EMBED_TOKEN_ENV).ok().filter(|t| !t.is_empty()),
        dimension,
        cache_dir: a.embed_cache.clone(),
        timeout: Duration::from_secs(60),
    }))
}

/// The embedder for a fresh ingest.
fn embedder_for_ingest(a: &EmbedderArgs) -> Result<Box<dyn Embedder>, Failure> {
    match a.embedder.as_deref().unwrap_or("hash") {
        "hash" => Ok(Box::new(HashEmbedder::new(a.embed_dim.unwrap_or(DEFAULT_HASH_DIM)))),
        "service" => {
            let model = a
                .embed_model
                .clone()
                .ok_or_else(|| usage("the service embedder needs --embed-model"))?;
            let dim = a.embed_dim.ok_or_else(|| usage("the service embedder needs --embed-dim"))?;
            Ok(Box::new(service_embedder(a, model, dim)?))
        }
        other => Err(usage(format!("unknown embedder {other:?} (expected hash or service)"))),
    }
}

/// The embedder a store was built with; flags may only confirm it.
fn embedder_for_store(a: &EmbedderArgs, manifest: &Manifest) -> Result<Box<dyn Embedder>, Failure> {
    let id = manifest.embedder_id.as_str();
    let embedder: Box<dyn Embedder> = if let Some(dim) = id.strip_prefix("hash-fnv1a-") {
        let dim = dim.parse().map_err(|_| usage(format!("store names an unknown embedder {id:?}")))?;
        Box::new(HashEmbedder::new(dim))
    } else if let Some(rest) = id.strip_prefix("service:") {
        let (model, dim) = rest
            .rsplit_once(':')
            .and_then(|(m, d)| Some((m.to_string(), d.parse().ok()?)))
            .ok_or_else(|| usage(format!("store names an unknown embedder {id:?}")))?;
        Box::new(service_embedder(a, model, dim)?)
    } else {
        return Err(usage(format!("store names an unknown embedder {id:?}")));
    };
    let kind = if id.starts_with("hash") { "hash" } else { "service" };
    if a.embedder.as_deref().is_some_and(|k| k != kind) {
        return Err(usage(format!("the store was built with the {kind} embedder ({id})")));
    }
    if a.embed_dim.is_some_and(|d| d != embedder.dimension()) {
        return Err(usage(format!("--embed-dim does not match the store ({id})")));
    }
    if a.embed_model.as_ref().is_some_and(|m| !id.contains(&format!(":{m}:"))) {
        return Err(usage(format!("--embed-model does not match the store ({id})")));
    }
    Ok(embedder)
}

fn gateway(a: &EngineArgs) -> Result<Gateway, Failure> {
    let http = || -> Result<Box<dyn ChatBackend>, Failure> {
        let url = a
            .gateway_url
            .clone()
            .ok_or_else(|| usage("the http gateway needs --gateway-url"))?;
        Ok(Box::new(HttpChat::new(HttpChatConfig::new(url, a.gateway_model.clone()))))
    };
    let spec = a
        .gateway
        .clone()
        .unwrap_or_else(|| if a.gateway_url.is_some() { "http" } else { "offline" }.to_string());
    let backend: Box<dyn ChatBackend> = match spec.split_once(':') {
        None if spec == "offline" => Box::new(OfflineChat),
        None if spec == "http" => http()?,
        Some(("replay", dir)) => Box::new(FixtureChat::replay(dir)),
        Some(("record", dir)) => Box::new(FixtureChat::record(dir, http()?)),
        _ => return Err(usage(format!("unknown gateway {spec:?} (offline, http, replay:DIR, record:DIR)"))),
    };
    Ok(Gateway::new(backend))
}

fn pipeline_config(a: &EngineArgs) -> Result<PipelineConfig, Failure> {
    let fusion = FusionWeights::new(a.lambda_p, a.lambda_d).map_err(|e| usage(e.to_string()))?;
    let weights = match &a.lambda_fixed {
        Some(sk) => format!("fixed:{sk}").parse::<WeightPolicy>().map_err(usage)?,
        None => a.weights,
    };
    if a.topk == 0 {
        return Err(usage("--topk must be at least 1"));
    }
    if !(a.distance_scale.is_finite() && a.distance_scale > 0.0) {
        return Err(usage("--distance-scale must be positive"));
    }
    Ok(PipelineConfig {
        fusion,
        weights,
        parser: a.parser,
        top_k: a.topk,
        distance_scale_km: a.distance_scale,
    })
}

/// Everything a query-time command owns; engines borrow from it.
struct Session {
    corpus: Corpus,
    embedder: Box<dyn Embedder>,
    masker: LexiconMasker,
    gateway: Option<Gateway>,
    config: PipelineConfig,
}

impl Session {
    fn open(a: &EngineArgs) -> Result<Self, Failure> {
        let config = pipeline_config(a)?;
        let manifest = corpus::read_manifest(&a.store)?;
        let masker = LexiconMasker;
        if manifest.masker_id != masker.id() {
            return Err(usage(format!("the store was built with masker {:?}", manifest.masker_id)));
        }
        let embedder = embedder_for_store(&a.embed, &manifest)?;
        let corpus = corpus::load(&a.store)?;
        let needs_gateway = config.parser == ParserMode::Llm || config.weights == WeightPolicy::Llm;
        let gateway = if needs_gateway { Some(gateway(a)?) } else { None };
        Ok(Self {
            corpus,
            embedder,
            masker,
            gateway,
            config,
        })
    }

    fn engine(&self) -> Engine<'_> {
        let e = Engine::new(&self.corpus, self.embedder.as_ref(), &self.masker).with_config(self.config);
        match &self.gateway {
            Some(g) => e.with_gateway(g),
            None => e,
        }
    }
}

fn query_input<'q>(q: &'q QuestionArgs, parser: ParserMode) -> Result<QueryInput<'q>, Failure> {
    match (&q.dsl, &q.question) {
        (Some(d), _) => Ok(QueryInput::Dsl(d)),
        (None, Some(text)) if parser == ParserMode::Dsl => Ok(QueryInput::Dsl(text)),
        (None, Some(text)) => Ok(QueryInput::Question {
            text,
            references: &q.at,
        }),
        (None, None) => Err(usage("give a question or --dsl")),
    }
}

fn run_query(session: &Session, q: &QuestionArgs) -> Result<georag_core::Trace, Failure> {
    let trace = session.engine().run(&query_input(q, session.config.parser)?)?;
    debug_assert!(answers_feasible(&trace, &session.corpus), "answer outside the query predicate");
    Ok(trace)
}

pub fn cmd_query(q: &QuestionArgs, format: AnswerFormat, a: &EngineArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let session = Session::open(a)?;
    let trace = run_query(&session, q)?;
    let text = match format {
        AnswerFormat::Table => render::answers_table(&trace, session.config.weights),
        AnswerFormat::Json => render::answers_json(&trace),
        AnswerFormat::Geojson => render::pretty(&to_geojson(&trace, &session.corpus)),
    };
    emit(out, &text)
}

pub fn cmd_explain(q: &QuestionArgs, format: TraceFormat, a: &EngineArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let session = Session::open(a)?;
    let trace = run_query(&session, q)?;
    let text = match format {
        TraceFormat::Text => render::explain(&trace, session.config.weights),
        TraceFormat::Json => render::pretty(&serde_json::to_value(&trace).expect("trace serializes")),
    };
    emit(out, &text)
}

fn parse_ks(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|k| match k.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(usage(format!("--k: {k:?} is not a positive integer"))),
        })
        .collect()
}

fn parse_systems(s: &str) -> Result<Vec<System>, Failure> {
    let mut systems = vec![System::Engine];
    if s.trim().eq_ignore_ascii_case("none") || s.trim().is_empty() {
        return Ok(systems);
    }
    for name in s.split(',') {
        let b: Baseline = name.parse().map_err(|e: String| usage(format!("--baselines: {e}")))?;
        let sys = System::Baseline(b);
        if !systems.contains(&sys) {
            systems.push(sys);
        }
    }
    Ok(systems)
}

pub fn cmd_eval(a: &args::EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let ks = parse_ks(&a.k)?;
    let systems = parse_systems(&a.baselines)?;
    let session = Session::open(&a.engine)?;
    let pairs = read_qa_pairs(&a.qa, &session.corpus)?;
    let report = evaluate(&session.engine(), &pairs, &ks, &systems)?;
    let text = match a.format {
        ReportFormat::Table => render::report_table(&report),
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    match &a.out {
        Some(path) => {
            fs::write(path, text).map_err(io_usage(path))?;
            emit(out, &format!("wrote {}\n", path.display()))
        }
        None => emit(out, &text),
    }
}

pub fn cmd_ingest(a: &args::IngestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let embedder = embedder_for_ingest(&a.embed)?;
    let (corpus, manifest) = corpus::ingest(&a.pois, a.gazetteer.as_deref(), embedder.as_ref(), &LexiconMasker, &a.store)?;
    emit(
        out,
        &format!(
            "ingested {} POIs and {} regions into {}\nembedder: {}\nmanifest: {}\n",
            corpus.len(),
            corpus.gazetteer().len(),
            a.store.display(),
            manifest.embedder_id,
            manifest.fingerprint()
        ),
    )
}

pub fn cmd_synth(a: &args::SynthArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.neighborhoods == 0 {
        return Err(usage("--neighborhoods must be at least 1"));
    }
    let city = georag_core::synth::synth_city(a.seed, a.neighborhoods);
    fs::create_dir_all(&a.out).map_err(io_usage(&a.out))?;
    let write = |name: &str, text: String| -> Result<PathBuf, Failure> {
        let path = a.out.join(name);
        fs::write(&path, text).map_err(io_usage(&path))?;
        Ok(path)
    };
    write("pois.geojson", render::pretty(&pois_to_geojson(&city.pois)))?;
    write("gazetteer.geojson", render::pretty(&gazetteer_to_geojson(&city.gazetteer)))?;
    let qa: String = city
        .qa
        .iter()
        .map(|q| serde_json::to_string(q).expect("qa serializes") + "\n")
        .collect();
    write("qa.jsonl", qa)?;
    emit(
        out,
        &format!(
            "wrote {} POIs, {} regions and {} QA pairs to {}\n",
            city.pois.len(),
            city.gazetteer.len(),
            city.qa.len(),
            a.out.display()
        ),
    )
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| usage(format!("cannot write output: {e}")))
}
