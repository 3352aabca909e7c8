//! Candidate generation against the spatial index and embedding-based
//! relevance scores.

mod embed;
mod mask;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{
    DimensionMismatch, EmbedError, Embedder, EmbeddingVector, HashEmbedder, ServiceConfig, ServiceEmbedder,
    DEFAULT_HASH_DIM,
};
pub use mask::{LexiconMasker, MaskingView};

use crate::category::Category;
use crate::corpus::Corpus;
use crate::index::IndexError;
use crate::query::{to_candidate_query, CandidatePlan, SpatialQuery};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("fusion weights must be finite and non-negative, got ({0}, {1})")]
    InvalidWeight(f64, f64),
    #[error("fusion weights are both zero")]
    ZeroWeights,
    #[error("distance scale must be positive, got {0}")]
    InvalidScale(f64),
}

/// Scores of one spatial candidate. `slot` is the record position in the
/// corpus it was retrieved from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub poi_id: String,
    #[serde(skip)]
    pub slot: usize,
    pub f_sparse: f64,
    pub f_dense_spatial: f64,
    pub f_semantic: f64,
    pub distance_km: f64,
}

pub const DEFAULT_DISTANCE_SCALE_KM: f64 = 1.0;

/// 1 for intersecting geometries (distance exactly 0), else `1/(1 + d/scale)`.
pub fn sparse_score(distance_km: f64, scale_km: f64) -> f64 {
    if distance_km == 0.0 {
        1.0
    } else {
        1.0 / (1.0 + distance_km / scale_km)
    }
}

/// The spatial candidate set of `sq`, ordered by ascending distance then id.
pub fn retrieve_sparse(sq: &SpatialQuery, corpus: &Corpus) -> Result<Vec<CandidateScores>, RetrievalError> {
    retrieve_sparse_scaled(sq, corpus, DEFAULT_DISTANCE_SCALE_KM)
}

pub fn retrieve_sparse_scaled(
    sq: &SpatialQuery,
    corpus: &Corpus,
    scale_km: f64,
) -> Result<Vec<CandidateScores>, RetrievalError> {
    if !(scale_km > 0.0 && scale_km.is_finite()) {
        return Err(RetrievalError::InvalidScale(scale_km));
    }
    let index = corpus.index();
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    match to_candidate_query(sq) {
        CandidatePlan::WithinDistance {
            references,
            eps_km,
            category,
        } => {
            for reference in &references {
                for hit in index.hits_within_distance(reference, eps_km, category)? {
                    best.entry(hit.slot)
                        .and_modify(|d| *d = d.min(hit.distance_km))
                        .or_insert(hit.distance_km);
                }
            }
        }
        CandidatePlan::Contained { region, category } => {
            for slot in index.slots_contained(&region, category)? {
                best.insert(slot, 0.0);
            }
        }
    }
    let mut out: Vec<CandidateScores> = best
        .into_iter()
        .map(|(slot, d)| CandidateScores {
            poi_id: corpus.record(slot).id.clone(),
            slot,
            f_sparse: sparse_score(d, scale_km),
            f_dense_spatial: 0.0,
            f_semantic: 0.0,
            distance_km: d,
        })
        .collect();
    out.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km).then_with(|| a.poi_id.cmp(&b.poi_id)));
    Ok(out)
}

/// Cosine between the question's spatial view and each candidate's stored
/// spatial-view embedding.
pub fn score_dense_spatial(
    question: &str,
    candidates: &mut [CandidateScores],
    corpus: &Corpus,
    embedder: &dyn Embedder,
    masker: &dyn MaskingView,
) -> Result<(), RetrievalError> {
    let q = embedder.embed(&masker.spatial_view(question))?;
    for c in candidates.iter_mut() {
        c.f_dense_spatial = q.cosine(&corpus.record(c.slot).spatial_vec)?;
    }
    Ok(())
}

/// Drops candidates of another category than `category` (when given) and
/// scores the rest by semantic-view cosine.
pub fn score_semantic(
    question: &str,
    candidates: Vec<CandidateScores>,
    category: Option<Category>,
    corpus: &Corpus,
    embedder: &dyn Embedder,
    masker: &dyn MaskingView,
) -> Result<Vec<CandidateScores>, RetrievalError> {
    let q = embedder.embed(&masker.semantic_view(question))?;
    let mut kept = Vec::with_capacity(candidates.len());
    for mut c in candidates {
        let record = corpus.record(c.slot);
        if category.is_some_and(|cat| cat != record.category) {
            continue;
        }
        c.f_semantic = q.cosine(&record.semantic_vec)?;
        kept.push(c);
    }
    Ok(kept)
}

/// Weights of the sparse and dense spatial scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    lambda_p: f64,
    lambda_d: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        Self {
            lambda_p: 0.5,
            lambda_d: 0.5,
        }
    }
}

impl FusionWeights {
    pub fn new(lambda_p: f64, lambda_d: f64) -> Result<Self, RetrievalError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(lambda_p) || !ok(lambda_d) {
            return Err(RetrievalError::InvalidWeight(lambda_p, lambda_d));
        }
        if lambda_p == 0.0 && lambda_d == 0.0 {
            return Err(RetrievalError::ZeroWeights);
        }
        Ok(Self { lambda_p, lambda_d })
    }

    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    pub fn fuse(&self, f_sparse: f64, f_dense: f64) -> f64 {
        self.lambda_p * f_sparse + self.lambda_d * f_dense
    }
}

pub fn fuse_spatial(f_sparse: f64, f_dense: f64, lambda_p: f64, lambda_d: f64) -> Result<f64, RetrievalError> {
    Ok(FusionWeights::new(lambda_p, lambda_d)?.fuse(f_sparse, f_dense))
}
