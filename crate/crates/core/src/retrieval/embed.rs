use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lexicon::tokenize;
use crate::llm::redact;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding service request failed: {0}")]
    Transport(String),
    #[error("embedding service returned an unusable response: {0}")]
    BadResponse(String),
    #[error("embedding has non-finite entries")]
    NonFinite,
    #[error("embedding cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("vector dimensions differ: {left} vs {right}")]
pub struct DimensionMismatch {
    pub left: usize,
    pub right: usize,
}

/// A dense text embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(EmbedError::NonFinite)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Cosine similarity in f64; a zero vector on either side scores 0.
    pub fn cosine(&self, other: &EmbeddingVector) -> Result<f64, DimensionMismatch> {
        if self.dim() != other.dim() {
            return Err(DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
        for (&a, &b) in self.0.iter().zip(&other.0) {
            let (a, b) = (f64::from(a), f64::from(b));
            dot += a * b;
            na += a * a;
            nb += b * b;
        }
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Text encoder.
pub trait Embedder: Send + Sync {
    /// Stable identifier recorded in stores built with this embedder.
    fn id(&self) -> String;

    fn dimension(&self) -> usize;

    /// Deterministic embedders return bit-identical vectors for identical text.
    fn is_deterministic(&self) -> bool;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub const DEFAULT_HASH_DIM: usize = 256;

/// Signed feature hashing over lowercased word unigrams, L2-normalized.
///
/// Each token is hashed with 64-bit FNV-1a; the bucket is `hash % dim` and
/// bit 32 of the hash picks the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_HASH_DIM }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        for token in tokenize(text) {
            let h = fnv1a64(token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if (h >> 32) & 1 == 1 { -1.0 } else { 1.0 };
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            acc.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector(acc.into_iter().map(|v| v as f32).collect())
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-fnv1a-{}", self.dim)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed_text(text))
    }
}

#[derive(Clone)]
pub struct ServiceConfig {
    /// Full endpoint URL, e.g. `https://host/v1/embeddings`.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub dimension: usize,
    /// Responses are cached here keyed by model and text hash.
    pub cache_dir: Option<PathBuf>,
    pub timeout: Duration,
}

impl fmt::Debug for ServiceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServiceConfig")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "***"))
            .field("dimension", &self.dimension)
            .field("cache_dir", &self.cache_dir)
            .field("timeout", &self.timeout)
            .finish()
    }
}

/// Client for an HTTP embedding endpoint taking `{model, input: [text]}`
/// and answering `{data: [{embedding: [f32], index}]}`.
pub struct ServiceEmbedder {
    config: ServiceConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

impl ServiceEmbedder {
    pub fn new(config: ServiceConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self { config, agent }
    }

    fn cache_path(&self, text: &str) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let mut h = Sha256::new();
        h.update(self.config.model.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        Some(dir.join(format!("{}.f32", hex::encode(h.finalize()))))
    }

    fn read_cache(&self, text: &str) -> Option<EmbeddingVector> {
        let bytes = fs::read(self.cache_path(text)?).ok()?;
        if bytes.len() != self.config.dimension * 4 {
            return None;
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        EmbeddingVector::new(values).ok()
    }

    fn write_cache(&self, text: &str, v: &EmbeddingVector) -> Result<(), EmbedError> {
        if let Some(path) = self.cache_path(text) {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let bytes: Vec<u8> = v.values().iter().flat_map(|f| f.to_le_bytes()).collect();
            fs::write(path, bytes)?;
        }
        Ok(())
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        log::debug!("POST {} model={} inputs={}", self.config.url, self.config.model, texts.len());
        let mut resp = req
            .send_json(&EmbedRequest {
                model: &self.config.model,
                input: texts,
            })
            .map_err(|e| EmbedError::Transport(redact(&e.to_string(), self.config.api_key.as_deref())))?;
        let mut body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::BadResponse(redact(&e.to_string(), self.config.api_key.as_deref())))?;
        if body.data.len() != texts.len() {
            return Err(EmbedError::BadResponse(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.data.len()
            )));
        }
        body.data.sort_by_key(|d| d.index.unwrap_or(0));
        body.data
            .into_iter()
            .map(|d| {
                if d.embedding.len() != self.config.dimension {
                    return Err(EmbedError::BadResponse(format!(
                        "expected dimension {}, got {}",
                        self.config.dimension,
                        d.embedding.len()
                    )));
                }
                EmbeddingVector::new(d.embedding)
            })
            .collect()
    }
}

impl Embedder for ServiceEmbedder {
    fn id(&self) -> String {
        format!("service:{}:{}", self.config.model, self.config.dimension)
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out: Vec<Option<EmbeddingVector>> = texts.iter().map(|t| self.read_cache(t)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            for (i, v) in missing.into_iter().zip(self.request(&batch)?) {
                self.write_cache(texts[i], &v)?;
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }
}
