//! End-to-end question answering: parse, retrieve, score, fuse, select.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::Category;
use crate::corpus::Corpus;
use crate::geometry::{buffer_outline, Coord, Geometry};
use crate::llm::{parse_with_llm, Gateway, GatewayError, GatewayReranker};
use crate::query::{
    parse_dsl, parse_rule_based, resolve_geometry, QueryError, QueryIntent, QueryKind, ResolvedFrom, SpatialQuery,
};
use crate::ranking::{
    heuristic_weights, llm_rerank, pareto_frontier, select, ParetoPoint, Ranked, RankingError, RerankCandidate,
    RerankOutcome, TradeoffWeights,
};
use crate::retrieval::{
    retrieve_sparse_scaled, score_dense_spatial, score_semantic, CandidateScores, Embedder, FusionWeights,
    MaskingView, RetrievalError, DEFAULT_DISTANCE_SCALE_KM,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("{0} needs a chat gateway")]
    NoGateway(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// Failures of an external service (embedding or chat), as opposed to
    /// bad input.
    pub fn is_external(&self) -> bool {
        matches!(self, Self::Retrieval(RetrievalError::Embed(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParserMode {
    Rule,
    Llm,
    Dsl,
}

impl FromStr for ParserMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rule" => Ok(Self::Rule),
            "llm" => Ok(Self::Llm),
            "dsl" => Ok(Self::Dsl),
            other => Err(format!("unknown parser {other:?} (expected rule, llm or dsl)")),
        }
    }
}

impl fmt::Display for ParserMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rule => "rule",
            Self::Llm => "llm",
            Self::Dsl => "dsl",
        })
    }
}

/// Where the spatial/semantic trade-off weights come from. `Llm` uses the
/// heuristic weights and then lets the chat model reorder the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightPolicy {
    Heuristic,
    Fixed(TradeoffWeights),
    Llm,
}

impl FromStr for WeightPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "heuristic" => return Ok(Self::Heuristic),
            "llm" => return Ok(Self::Llm),
            _ => {}
        }
        let Some(rest) = s.strip_prefix("fixed:") else {
            return Err(format!("unknown weights {s:?} (expected heuristic, fixed:S,K or llm)"));
        };
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| format!("fixed weights need two numbers, got {rest:?}"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        TradeoffWeights::new(num(a)?, num(b)?)
            .map(Self::Fixed)
            .map_err(|e| e.to_string())
    }
}

impl fmt::Display for WeightPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Heuristic => f.write_str("heuristic"),
            Self::Llm => f.write_str("llm"),
            Self::Fixed(w) => write!(f, "fixed:{},{}", w.lambda_s(), w.lambda_k()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub fusion: FusionWeights,
    pub weights: WeightPolicy,
    pub parser: ParserMode,
    pub top_k: usize,
    pub distance_scale_km: f64,
}

pub const DEFAULT_TOP_K: usize = 10;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fusion: FusionWeights::default(),
            weights: WeightPolicy::Heuristic,
            parser: ParserMode::Rule,
            top_k: DEFAULT_TOP_K,
            distance_scale_km: DEFAULT_DISTANCE_SCALE_KM,
        }
    }
}

/// How the structured query was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "by", content = "note", rename_all = "snake_case")]
pub enum ParseStage {
    Rule,
    Llm,
    /// The model path failed and the rule parser was used instead.
    RuleFallback(String),
    /// A DSL expression was given; no parsing of natural language.
    Bypassed,
    /// No reference point was usable; the referenced region was searched.
    ReferencedRegion,
}

/// A question ready for retrieval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prepared {
    /// Text the dense scores are computed from.
    pub text: String,
    pub query: SpatialQuery,
    pub intent: QueryIntent,
    pub stage: ParseStage,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub rank: usize,
    pub poi_id: String,
    pub name: String,
    pub category: Category,
    pub score: f64,
    pub f_s: f64,
    pub f_k: f64,
    pub f_sparse: f64,
    pub f_dense_spatial: f64,
    pub distance_km: f64,
    pub on_frontier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    #[serde(flatten)]
    pub scores: CandidateScores,
    pub f_s: f64,
}

/// Every intermediate result of one run, for `explain`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub prepared: Prepared,
    pub kind: QueryKind,
    pub eps_km: Option<f64>,
    pub retrieved: usize,
    /// Candidates after the category filter, in retrieval order.
    pub candidates: Vec<ScoredCandidate>,
    pub frontier: Vec<String>,
    pub fusion: FusionWeights,
    pub weights: Option<TradeoffWeights>,
    pub rerank: Option<String>,
    pub answers: Vec<Answer>,
    /// Set when the run ended early, naming the last stage reached.
    pub stopped_at: Option<&'static str>,
}

pub enum QueryInput<'q> {
    /// Natural language plus place references (names or `lon, lat`).
    Question { text: &'q str, references: &'q [String] },
    Dsl(&'q str),
}

pub struct Engine<'a> {
    pub corpus: &'a Corpus,
    pub embedder: &'a dyn Embedder,
    pub masker: &'a dyn MaskingView,
    pub gateway: Option<&'a Gateway>,
    pub config: PipelineConfig,
}

impl<'a> Engine<'a> {
    pub fn new(corpus: &'a Corpus, embedder: &'a dyn Embedder, masker: &'a dyn MaskingView) -> Self {
        Self {
            corpus,
            embedder,
            masker,
            gateway: None,
            config: PipelineConfig::default(),
        }
    }

    pub fn with_config(mut self, config: PipelineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_gateway(mut self, gateway: &'a Gateway) -> Self {
        self.gateway = Some(gateway);
        self
    }

    fn check(&self) -> Result<(), PipelineError> {
        if self.config.top_k == 0 {
            return Err(PipelineError::Config("top_k must be at least 1".into()));
        }
        let needs_gateway = self.config.parser == ParserMode::Llm || self.config.weights == WeightPolicy::Llm;
        if needs_gateway && self.gateway.is_none() {
            return Err(PipelineError::NoGateway("the llm parser or weights"));
        }
        Ok(())
    }

    pub fn prepare(&self, input: &QueryInput) -> Result<Prepared, PipelineError> {
        self.check()?;
        match *input {
            QueryInput::Dsl(src) => {
                let dsl = parse_dsl(src).map_err(QueryError::from)?;
                let text = dsl.text.clone().unwrap_or_default();
                let (query, intent) = dsl.into_spatial_query(self.corpus.gazetteer(), src)?;
                Ok(Prepared {
                    text,
                    query,
                    intent,
                    stage: ParseStage::Bypassed,
                    references: Vec::new(),
                })
            }
            QueryInput::Question { text, references } => self.prepare_question(text, references),
        }
    }

    fn prepare_question(&self, text: &str, references: &[String]) -> Result<Prepared, PipelineError> {
        let gazetteer = self.corpus.gazetteer();
        let mut points: Vec<Coord> = Vec::new();
        let mut regions: Vec<String> = Vec::new();
        let mut described = Vec::new();
        for r in references {
            let resolved = resolve_geometry(r, gazetteer, self.corpus)?;
            described.push(match &resolved.from {
                ResolvedFrom::Poi(id) => format!("{r} -> poi {id}"),
                ResolvedFrom::Region(name) => format!("{r} -> region {name}"),
                ResolvedFrom::Temporary => format!("{r} -> point"),
            });
            match resolved.from {
                ResolvedFrom::Region(name) => regions.push(name),
                _ => points.push(resolved.geometry.anchor()),
            }
        }

        let parsed = match self.config.parser {
            ParserMode::Llm => {
                let gateway = self.gateway.ok_or(PipelineError::NoGateway("the llm parser"))?;
                match parse_with_llm(text, &points, gazetteer, gateway) {
                    Ok(p) => Ok((p, ParseStage::Llm)),
                    Err(GatewayError::Query(e)) => Err(e),
                    Err(e) => {
                        log::warn!("model parser failed, using rules: {e}");
                        parse_rule_based(text, &points, gazetteer).map(|p| (p, ParseStage::RuleFallback(e.to_string())))
                    }
                }
            }
            _ => parse_rule_based(text, &points, gazetteer).map(|p| (p, ParseStage::Rule)),
        };
        let ((query, intent), stage) = match parsed {
            Err(QueryError::UnresolvedReference) if !regions.is_empty() => {
                let entry = gazetteer.get(&regions[0]).expect("resolved from the gazetteer");
                let intent = crate::query::split_intent(text);
                let query = SpatialQuery::region_contain(
                    entry.name.clone(),
                    entry.polygon.clone(),
                    intent.target_category,
                    text,
                )?;
                ((query, intent), ParseStage::ReferencedRegion)
            }
            other => other?,
        };
        Ok(Prepared {
            text: text.to_string(),
            query,
            intent,
            stage,
            references: described,
        })
    }

    pub fn run(&self, input: &QueryInput) -> Result<Trace, PipelineError> {
        let prepared = self.prepare(input)?;
        self.run_prepared(prepared, self.config.top_k)
    }

    pub fn run_prepared(&self, prepared: Prepared, top_k: usize) -> Result<Trace, PipelineError> {
        if top_k == 0 {
            return Err(PipelineError::Config("top_k must be at least 1".into()));
        }
        let corpus = self.corpus;
        let sq = &prepared.query;
        let mut trace = Trace {
            kind: sq.kind(),
            eps_km: sq.eps().map(|e| e.km()),
            retrieved: 0,
            candidates: Vec::new(),
            frontier: Vec::new(),
            fusion: self.config.fusion,
            weights: None,
            rerank: None,
            answers: Vec::new(),
            stopped_at: None,
            prepared: prepared.clone(),
        };

        let mut candidates = retrieve_sparse_scaled(sq, corpus, self.config.distance_scale_km)?;
        trace.retrieved = candidates.len();
        if candidates.is_empty() {
            trace.stopped_at = Some("retrieval");
            return Ok(trace);
        }
        let text = &prepared.text;
        score_dense_spatial(text, &mut candidates, corpus, self.embedder, self.masker)?;
        let candidates = score_semantic(
            text,
            candidates,
            prepared.intent.target_category,
            corpus,
            self.embedder,
            self.masker,
        )?;
        let fusion = self.config.fusion;
        trace.candidates = candidates
            .into_iter()
            .map(|c| ScoredCandidate {
                f_s: fusion.fuse(c.f_sparse, c.f_dense_spatial),
                scores: c,
            })
            .collect();
        if trace.candidates.is_empty() {
            trace.stopped_at = Some("semantic filter");
            return Ok(trace);
        }

        let pool = trace
            .candidates
            .iter()
            .map(|c| ParetoPoint::new(c.scores.poi_id.clone(), c.f_s, c.scores.f_semantic))
            .collect::<Result<Vec<_>, _>>()?;
        trace.frontier = pareto_frontier(&pool).into_iter().map(|p| p.poi_id).collect();
        let weights = match self.config.weights {
            WeightPolicy::Fixed(w) => w,
            WeightPolicy::Heuristic | WeightPolicy::Llm => heuristic_weights(&prepared.intent),
        };
        trace.weights = Some(weights);
        let mut ranked = select(&pool, weights, top_k)?;

        if self.config.weights == WeightPolicy::Llm {
            let gateway = self.gateway.ok_or(PipelineError::NoGateway("llm weights"))?;
            let on_frontier: Vec<RerankCandidate> = ranked
                .iter()
                .filter(|r| r.on_frontier)
                .map(|r| {
                    let c = self.candidate(&trace, &r.poi_id);
                    let rec = corpus.record(c.scores.slot);
                    RerankCandidate {
                        poi_id: rec.id.clone(),
                        name: rec.name.clone(),
                        description: rec.description(),
                        f_sparse: c.scores.f_sparse,
                        distance_km: c.scores.distance_km,
                    }
                })
                .collect();
            let reranker = GatewayReranker {
                gateway,
                intent: &prepared.intent,
            };
            let (order, outcome) = llm_rerank(text, &on_frontier, &ranked, &reranker);
            trace.rerank = Some(match outcome {
                RerankOutcome::Applied => "applied".to_string(),
                RerankOutcome::FellBack(why) => format!("fell back: {why}"),
            });
            ranked = order;
        }
        trace.answers = self.answers(&trace, &ranked);
        Ok(trace)
    }

    fn candidate<'t>(&self, trace: &'t Trace, id: &str) -> &'t ScoredCandidate {
        trace
            .candidates
            .iter()
            .find(|c| c.scores.poi_id == id)
            .expect("ranked ids come from the candidate pool")
    }

    fn answers(&self, trace: &Trace, ranked: &[Ranked]) -> Vec<Answer> {
        ranked
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let c = self.candidate(trace, &r.poi_id);
                let rec = self.corpus.record(c.scores.slot);
                Answer {
                    rank: i + 1,
                    poi_id: r.poi_id.clone(),
                    name: rec.name.clone(),
                    category: rec.category,
                    score: r.score,
                    f_s: c.f_s,
                    f_k: c.scores.f_semantic,
                    f_sparse: c.scores.f_sparse,
                    f_dense_spatial: c.scores.f_dense_spatial,
                    distance_km: c.scores.distance_km,
                    on_frontier: r.on_frontier,
                }
            })
            .collect()
    }
}

/// Checks that every answer satisfies the query predicate.
pub fn answers_feasible(trace: &Trace, corpus: &Corpus) -> bool {
    let sq = &trace.prepared.query;
    trace.answers.iter().all(|a| {
        let Some(rec) = corpus.get(&a.poi_id) else {
            return false;
        };
        if sq.target_category().is_some_and(|c| c != rec.category) {
            return false;
        }
        match sq.kind() {
            QueryKind::RegionContain => crate::geometry::contains(&sq.references()[0], &rec.geometry).unwrap_or(false),
            _ => {
                let eps = sq.eps().map_or(0.0, |e| e.km());
                sq.search_geometries()
                    .iter()
                    .any(|g| crate::geometry::within_buffer(&rec.geometry, g, eps).unwrap_or(false))
            }
        }
    })
}

/// Map view of a run: reference geometries, the search buffer and the
/// ranked answers, as a GeoJSON FeatureCollection.
pub fn to_geojson(trace: &Trace, corpus: &Corpus) -> serde_json::Value {
    use serde_json::json;
    let sq = &trace.prepared.query;
    let mut features = Vec::new();
    for g in sq.references() {
        features.push(json!({
            "type": "Feature",
            "geometry": g,
            "properties": {"role": "reference", "kind": sq.kind(), "region": sq.region_name()},
        }));
    }
    if let Some(eps) = sq.eps() {
        for g in sq.search_geometries() {
            if let Some(ring) = buffer_outline(&g, eps.km(), 16) {
                features.push(json!({
                    "type": "Feature",
                    "geometry": ring,
                    "properties": {"role": "buffer", "eps_km": eps.km()},
                }));
            }
        }
    }
    for a in &trace.answers {
        let geometry: &Geometry = &corpus.get(&a.poi_id).expect("answer from corpus").geometry;
        features.push(json!({
            "type": "Feature",
            "id": a.poi_id,
            "geometry": geometry,
            "properties": {
                "role": "answer",
                "rank": a.rank,
                "name": a.name,
                "category": a.category,
                "score": a.score,
                "distance_km": a.distance_km,
                "on_frontier": a.on_frontier,
            },
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}
