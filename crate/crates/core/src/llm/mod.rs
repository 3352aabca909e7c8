//! Chat-model gateway for the spatial extraction, intent extraction and
//! rerank prompts.

mod backend;
mod schema;
mod template;

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

pub(crate) use backend::redact;
pub use backend::{
    ChatBackend, FixtureChat, HttpChat, HttpChatConfig, OfflineChat, StubChat, DEFAULT_MAX_CONCURRENCY,
    DEFAULT_TOKEN_ENV,
};
pub use schema::{extract_json, validate, IntentExtraction, Parsed, SpatialExtraction};
pub use template::{intent_bindings, rerank_bindings, spatial_bindings, Bindings, PromptTemplate, TemplateName};

use crate::corpus::Gazetteer;
use crate::geometry::{Coord, Length};
use crate::query::{estimate_epsilon, QueryError, QueryIntent, QueryKind, SpatialQuery};
use crate::ranking::{RerankCandidate, Reranker};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("template {template} has no value for {{{placeholder}}}")]
    Unbound { template: TemplateName, placeholder: String },
    #[error("chat service: {0}")]
    Transport(String),
    #[error("{template} reply failed validation: {reason}")]
    Schema { template: TemplateName, reason: String },
    #[error("fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayResponse {
    pub raw: String,
    pub parsed: Parsed,
}

pub const DEFAULT_MAX_RETRIES: usize = 2;

fn repair_suffix(reason: &str) -> String {
    format!(
        "\n\nYour previous reply could not be used ({reason}). \
         Reply again with only the JSON described above and nothing else."
    )
}

/// Renders prompts, sends them to a backend and validates the replies.
/// Validated replies are cached per template and bindings.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    max_retries: usize,
    cache: Mutex<HashMap<(TemplateName, String), GatewayResponse>>,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Self {
            backend,
            max_retries: DEFAULT_MAX_RETRIES,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_max_retries(mut self, n: usize) -> Self {
        self.max_retries = n;
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    /// One validated round trip. A reply failing validation is retried up
    /// to `max_retries` times with a repair note appended to the prompt;
    /// transport failures are returned at once.
    pub fn complete(&self, template: TemplateName, bindings: &Bindings) -> Result<GatewayResponse, GatewayError> {
        let key = (template, bindings.digest());
        if let Some(hit) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let prompt = PromptTemplate::get(template).render(bindings)?;
        let mut reason = String::new();
        for attempt in 0..=self.max_retries {
            let text = if attempt == 0 {
                prompt.clone()
            } else {
                format!("{prompt}{}", repair_suffix(&reason))
            };
            let raw = self.backend.chat(template, &text)?;
            match validate(template, &raw) {
                Ok(parsed) => {
                    let resp = GatewayResponse { raw, parsed };
                    self.cache
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .insert(key, resp.clone());
                    return Ok(resp);
                }
                Err(r) => {
                    log::warn!("{template} reply rejected (attempt {}): {r}", attempt + 1);
                    reason = r;
                }
            }
        }
        Err(GatewayError::Schema { template, reason })
    }

    pub fn extract_spatial(
        &self,
        question: &str,
        location_count: usize,
        gazetteer: &Gazetteer,
    ) -> Result<SpatialExtraction, GatewayError> {
        let names = gazetteer.names();
        match self
            .complete(TemplateName::SpatialExtract, &spatial_bindings(question, location_count, &names, &[]))?
            .parsed
        {
            Parsed::Spatial(s) => Ok(s),
            _ => unreachable!("validated against the spatial schema"),
        }
    }

    pub fn extract_intent(&self, question: &str) -> Result<IntentExtraction, GatewayError> {
        match self.complete(TemplateName::IntentExtract, &intent_bindings(question))?.parsed {
            Parsed::Intent(i) => Ok(i),
            _ => unreachable!("validated against the intent schema"),
        }
    }
}

/// Model-driven counterpart of the rule-based parser. Kinds the situation
/// does not allow are demoted: a route needs exactly two points and a
/// region must exist in the gazetteer; otherwise the points are searched
/// around. Missing distances fall back to the wording-based estimate.
pub fn parse_with_llm(
    question: &str,
    points: &[Coord],
    gazetteer: &Gazetteer,
    gateway: &Gateway,
) -> Result<(SpatialQuery, QueryIntent), GatewayError> {
    if question.trim().is_empty() {
        return Err(QueryError::EmptyQuestion.into());
    }
    let spatial = gateway.extract_spatial(question, points.len(), gazetteer)?;
    let intent = gateway.extract_intent(question)?;
    let category = Some(intent.category);
    let qi = QueryIntent {
        spatial_requirement: intent.spatial_constraints.unwrap_or_default(),
        semantic_requirement: intent.user_constraints.unwrap_or_default(),
        target_category: category,
    };
    let region = spatial.region.as_deref().and_then(|r| gazetteer.get(r));

    let sq = match spatial.query_type {
        QueryKind::RouteBuffer if points.len() == 2 => {
            let eps = spatial
                .buffer_distance
                .map(Length::from_meters)
                .or_else(|| estimate_epsilon(question, QueryKind::RouteBuffer))
                .expect("route has a default");
            SpatialQuery::route_buffer(points[0], points[1], eps, category, question)?
        }
        QueryKind::RegionContain if region.is_some() => {
            let r = region.expect("checked");
            SpatialQuery::region_contain(r.name.clone(), r.polygon.clone(), category, question)?
        }
        _ if !points.is_empty() => {
            let eps = spatial
                .distance_km
                .map(Length::from_km)
                .or_else(|| estimate_epsilon(question, QueryKind::PointRadius))
                .expect("point has a default");
            SpatialQuery::point_radius(points, eps, category, question)?
        }
        _ => return Err(QueryError::UnresolvedReference.into()),
    };
    Ok((sq, qi))
}

/// Reranks through the rerank prompt, given the extracted constraints.
pub struct GatewayReranker<'a> {
    pub gateway: &'a Gateway,
    pub intent: &'a QueryIntent,
}

impl Reranker for GatewayReranker<'_> {
    fn rerank(&self, _question: &str, candidates: &[RerankCandidate]) -> Result<Vec<usize>, String> {
        let b = rerank_bindings(&self.intent.spatial_requirement, &self.intent.semantic_requirement, candidates);
        match self.gateway.complete(TemplateName::Rerank, &b) {
            Ok(GatewayResponse {
                parsed: Parsed::Rerank(order),
                ..
            }) => Ok(order),
            Ok(_) => Err("unexpected reply shape".into()),
            Err(e) => Err(e.to_string()),
        }
    }
}
