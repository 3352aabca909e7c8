//! POI records, regions and QA pairs, plus the persisted store.

mod gazetteer;
mod input;
mod qa;
mod store;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use gazetteer::{Gazetteer, GazetteerEntry, GazetteerError};
pub use input::{gazetteer_to_geojson, pois_to_geojson, read_gazetteer, read_pois, PoiInput};
pub use qa::{read_qa_pairs, QaPair};
pub use store::{ingest, load, read_manifest, save, Manifest, STORE_FORMAT_VERSION};

use crate::category::Category;
use crate::geometry::Geometry;
use crate::index::{IndexEntry, IndexError, SpatialIndex};
use crate::lexicon::normalize_name;
use crate::query::NameLookup;
use crate::retrieval::{EmbedError, Embedder, EmbeddingVector, MaskingView};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{locator}: {message}")]
    Record { locator: String, message: String },
    #[error("duplicate POI id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("vector for {id:?} has dimension {got}, corpus uses {expected}")]
    Dimension { id: String, expected: usize, got: usize },
    #[error("store format version {found}, this build reads {expected}")]
    Version { found: u32, expected: u32 },
    #[error("store file {0} fails its checksum")]
    Checksum(String),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
    #[error("another ingest holds the lock {0}")]
    Locked(String),
    #[error("embedder {found:?} does not match the store's {expected:?}")]
    EmbedderMismatch { expected: String, found: String },
}

impl CorpusError {
    pub(crate) fn record(locator: impl Into<String>, message: impl ToString) -> Self {
        Self::Record {
            locator: locator.into(),
            message: message.to_string(),
        }
    }
}

/// A preprocessed POI: its description split into views, each embedded.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiRecord {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub geometry: Geometry,
    pub reviews: Vec<String>,
    pub spatial_summary: String,
    pub semantic_summary: String,
    pub spatial_vec: EmbeddingVector,
    pub semantic_vec: EmbeddingVector,
}

/// Name, category and reviews, one per line.
pub fn description(name: &str, category: Category, reviews: &[String]) -> String {
    let mut lines = vec![name.trim().to_string(), category.as_str().to_string()];
    lines.extend(reviews.iter().map(|r| r.trim().to_string()).filter(|r| !r.is_empty()));
    lines.join("\n")
}

impl PoiRecord {
    pub fn build(poi: PoiInput, embedder: &dyn Embedder, masker: &dyn MaskingView) -> Result<Self, EmbedError> {
        let text = description(&poi.name, poi.category, &poi.reviews);
        let spatial_summary = masker.spatial_view(&text);
        let semantic_summary = masker.semantic_view(&text);
        let mut vecs = embedder.embed_batch(&[&spatial_summary, &semantic_summary])?;
        let semantic_vec = vecs.pop().expect("two vectors");
        let spatial_vec = vecs.pop().expect("two vectors");
        Ok(Self {
            id: poi.id,
            name: poi.name,
            category: poi.category,
            geometry: poi.geometry,
            reviews: poi.reviews,
            spatial_summary,
            semantic_summary,
            spatial_vec,
            semantic_vec,
        })
    }

    pub fn description(&self) -> String {
        description(&self.name, self.category, &self.reviews)
    }
}

/// Immutable, indexed corpus. Record positions double as index slots.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<PoiRecord>,
    gazetteer: Gazetteer,
    index: SpatialIndex,
    by_id: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    embedder_id: String,
    dimension: usize,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
            && self.gazetteer == other.gazetteer
            && self.embedder_id == other.embedder_id
            && self.dimension == other.dimension
    }
}

impl Corpus {
    pub fn new(
        records: Vec<PoiRecord>,
        gazetteer: Gazetteer,
        embedder_id: impl Into<String>,
        dimension: usize,
    ) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(records.len());
        let mut by_name = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
            for v in [&r.spatial_vec, &r.semantic_vec] {
                if v.dim() != dimension {
                    return Err(CorpusError::Dimension {
                        id: r.id.clone(),
                        expected: dimension,
                        got: v.dim(),
                    });
                }
            }
            by_name.entry(normalize_name(&r.name)).or_insert(i);
        }
        let entries = records
            .iter()
            .map(|r| IndexEntry::new(r.id.clone(), r.geometry.clone()).with_category(r.category))
            .collect();
        let index = SpatialIndex::build(entries)?;
        Ok(Self {
            records,
            gazetteer,
            index,
            by_id,
            by_name,
            embedder_id: embedder_id.into(),
            dimension,
        })
    }

    /// Preprocesses raw POIs and indexes them.
    pub fn build(
        pois: Vec<PoiInput>,
        gazetteer: Gazetteer,
        embedder: &dyn Embedder,
        masker: &dyn MaskingView,
    ) -> Result<Self, CorpusError> {
        let records = pois
            .into_iter()
            .map(|p| PoiRecord::build(p, embedder, masker))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(records, gazetteer, embedder.id(), embedder.dimension())
    }

    pub fn records(&self) -> &[PoiRecord] {
        &self.records
    }

    pub fn record(&self, slot: usize) -> &PoiRecord {
        &self.records[slot]
    }

    pub fn get(&self, id: &str) -> Option<&PoiRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn slot_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// SHA-256 over records, vectors, gazetteer and embedder identity.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.embedder_id.as_bytes());
        h.update((self.dimension as u64).to_le_bytes());
        for r in &self.records {
            let head = serde_json::json!([r.id, r.name, r.category, r.geometry, r.reviews]);
            h.update(head.to_string().as_bytes());
            for v in [&r.spatial_vec, &r.semantic_vec] {
                for x in v.values() {
                    h.update(x.to_le_bytes());
                }
            }
        }
        for e in self.gazetteer.entries() {
            h.update(serde_json::json!([e.name, e.aliases, e.polygon]).to_string().as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn check_embedder(&self, embedder: &dyn Embedder) -> Result<(), CorpusError> {
        if embedder.id() != self.embedder_id {
            return Err(CorpusError::EmbedderMismatch {
                expected: self.embedder_id.clone(),
                found: embedder.id(),
            });
        }
        Ok(())
    }
}

impl NameLookup for Corpus {
    fn find_by_name(&self, name: &str) -> Option<(&str, &Geometry)> {
        let r = &self.records[*self.by_name.get(&normalize_name(name))?];
        Some((&r.id, &r.geometry))
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct StoredRecord {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub geometry: Geometry,
    pub reviews: Vec<String>,
    pub spatial_summary: String,
    pub semantic_summary: String,
}

#[cfg(test)]
mod tests;
