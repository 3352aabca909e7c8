//! Spatial/semantic Pareto frontier and the weighted selection over it.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{count_semantic_cues, count_spatial_cues};
use crate::query::QueryIntent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("trade-off weights must be non-negative and sum to 1, got ({0}, {1})")]
    InvalidWeights(f64, f64),
    #[error("objective of {0:?} is not finite")]
    NonFinite(String),
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("no candidate satisfies the query")]
    NoAnswer,
}

/// A candidate with its fused spatial score `f_s` and semantic score `f_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub poi_id: String,
    pub f_s: f64,
    pub f_k: f64,
}

impl ParetoPoint {
    pub fn new(poi_id: impl Into<String>, f_s: f64, f_k: f64) -> Result<Self, RankingError> {
        let poi_id = poi_id.into();
        if !(f_s.is_finite() && f_k.is_finite()) {
            return Err(RankingError::NonFinite(poi_id));
        }
        Ok(Self { poi_id, f_s, f_k })
    }
}

/// True when `a` is at least as good as `b` on both objectives and
/// strictly better on one.
pub fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.f_s >= b.f_s && a.f_k >= b.f_k && (a.f_s > b.f_s || a.f_k > b.f_k)
}

fn frontier_order(a: &ParetoPoint, b: &ParetoPoint) -> Ordering {
    b.f_s
        .total_cmp(&a.f_s)
        .then_with(|| b.f_k.total_cmp(&a.f_k))
        .then_with(|| a.poi_id.cmp(&b.poi_id))
}

/// Non-dominated points, by descending `f_s`, then descending `f_k`, then
/// id. Points sharing an objective pair are all kept.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut sorted: Vec<&ParetoPoint> = points.iter().collect();
    sorted.sort_by(|a, b| frontier_order(a, b));
    let mut out = Vec::new();
    // best f_k among points with strictly larger f_s
    let mut best_above = f64::NEG_INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        let f_s = sorted[i].f_s;
        let group_max = sorted[i].f_k;
        let mut j = i;
        while j < sorted.len() && sorted[j].f_s == f_s {
            if sorted[j].f_k == group_max && group_max > best_above {
                out.push(sorted[j].clone());
            }
            j += 1;
        }
        best_above = best_above.max(group_max);
        i = j;
    }
    out
}

/// Convex weights of the spatial and semantic objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffWeights {
    lambda_s: f64,
    lambda_k: f64,
}

impl TradeoffWeights {
    pub fn new(lambda_s: f64, lambda_k: f64) -> Result<Self, RankingError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(lambda_s) || !ok(lambda_k) || (lambda_s + lambda_k - 1.0).abs() > 1e-9 {
            return Err(RankingError::InvalidWeights(lambda_s, lambda_k));
        }
        Ok(Self { lambda_s, lambda_k })
    }

    /// `(λ_s, 1 − λ_s)`.
    pub fn spatial(lambda_s: f64) -> Result<Self, RankingError> {
        Self::new(lambda_s, 1.0 - lambda_s)
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn lambda_k(&self) -> f64 {
        self.lambda_k
    }

    pub fn score(&self, p: &ParetoPoint) -> f64 {
        self.lambda_s * p.f_s + self.lambda_k * p.f_k
    }
}

/// `λ_s = (1 + s) / (2 + s + k)` where `s` counts spatial cue words in the
/// spatial requirement and `k` counts preference words in the semantic one.
pub fn heuristic_weights(intent: &QueryIntent) -> TradeoffWeights {
    let s = count_spatial_cues(&intent.spatial_requirement) as f64;
    let k = count_semantic_cues(&intent.semantic_requirement) as f64;
    let lambda_s = (1.0 + s) / (2.0 + s + k);
    TradeoffWeights {
        lambda_s,
        lambda_k: 1.0 - lambda_s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub poi_id: String,
    pub score: f64,
    pub on_frontier: bool,
}

/// Frontier members by weighted score, then, while slots remain, the other
/// candidates by the same score. Ties go to the smaller id.
///
/// The frontier is taken over the objectives with positive weight only, so
/// a zero-weighted objective cannot promote a candidate.
pub fn select(pool: &[ParetoPoint], w: TradeoffWeights, top_k: usize) -> Result<Vec<Ranked>, RankingError> {
    if top_k == 0 {
        return Err(RankingError::ZeroTopK);
    }
    if pool.is_empty() {
        return Err(RankingError::NoAnswer);
    }
    if let Some(bad) = pool.iter().find(|p| !(p.f_s.is_finite() && p.f_k.is_finite())) {
        return Err(RankingError::NonFinite(bad.poi_id.clone()));
    }
    let active: Vec<ParetoPoint> = pool
        .iter()
        .map(|p| ParetoPoint {
            poi_id: p.poi_id.clone(),
            f_s: if w.lambda_s > 0.0 { p.f_s } else { 0.0 },
            f_k: if w.lambda_k > 0.0 { p.f_k } else { 0.0 },
        })
        .collect();
    let frontier: HashSet<String> = pareto_frontier(&active).into_iter().map(|p| p.poi_id).collect();

    let mut ranked: Vec<Ranked> = pool
        .iter()
        .map(|p| Ranked {
            poi_id: p.poi_id.clone(),
            score: w.score(p),
            on_frontier: frontier.contains(&p.poi_id),
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.on_frontier
            .cmp(&a.on_frontier)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.poi_id.cmp(&b.poi_id))
    });
    ranked.truncate(top_k);
    Ok(ranked)
}

/// What a reranker sees of each frontier member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RerankCandidate {
    pub poi_id: String,
    pub name: String,
    pub description: String,
    pub f_sparse: f64,
    pub distance_km: f64,
}

/// A component ordering candidates, e.g. a language model. Returns a
/// permutation of candidate indices, best first.
pub trait Reranker {
    fn rerank(&self, question: &str, candidates: &[RerankCandidate]) -> Result<Vec<usize>, String>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RerankOutcome {
    Applied,
    /// The reranker failed or answered with something other than a
    /// permutation; the weighted selection was used instead.
    FellBack(String),
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Reorders the frontier part of `selected` (the output of [`select`]) by
/// the reranker's permutation over `candidates`; anything else in
/// `selected` keeps its place after them.
pub fn llm_rerank(
    question: &str,
    candidates: &[RerankCandidate],
    selected: &[Ranked],
    reranker: &dyn Reranker,
) -> (Vec<Ranked>, RerankOutcome) {
    let fallback = |why: String| {
        log::warn!("rerank fell back to weighted selection: {why}");
        (selected.to_vec(), RerankOutcome::FellBack(why))
    };
    let order = match reranker.rerank(question, candidates) {
        Ok(o) => o,
        Err(e) => return fallback(e),
    };
    if !is_permutation(&order, candidates.len()) {
        return fallback(format!("{order:?} is not a permutation of 0..{}", candidates.len()));
    }
    let reranked_ids: Vec<&str> = order.iter().map(|&i| candidates[i].poi_id.as_str()).collect();
    let mut out: Vec<Ranked> = Vec::with_capacity(selected.len());
    for id in &reranked_ids {
        match selected.iter().find(|r| r.poi_id == *id) {
            Some(r) => out.push(r.clone()),
            None => return fallback(format!("candidate {id:?} was not selected")),
        }
    }
    out.extend(selected.iter().filter(|r| !reranked_ids.contains(&r.poi_id.as_str())).cloned());
    out.truncate(selected.len());
    (out, RerankOutcome::Applied)
}
