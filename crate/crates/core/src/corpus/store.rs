//! On-disk corpus store.
//!
//! A store is a directory holding:
//!
//! * `manifest.json`: format version, embedder id, vector dimension,
//!   record count and the SHA-256 of each data file;
//! * `records.json`: records without vectors, in corpus order;
//! * `gazetteer.json`: normalized region entries;
//! * `vectors.bin`: for each record in order, its spatial then its semantic
//!   vector, each `dimension` little-endian `f32` values.
//!
//! Nothing time-dependent is written, so identical inputs give identical
//! bytes.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_gazetteer, read_pois, Corpus, CorpusError, Gazetteer, GazetteerEntry, PoiRecord, StoredRecord};
use crate::retrieval::{Embedder, EmbeddingVector, MaskingView};

pub const STORE_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const RECORDS: &str = "records.json";
const GAZETTEER: &str = "gazetteer.json";
const VECTORS: &str = "vectors.bin";
const LOCK: &str = "ingest.lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub embedder_id: String,
    pub dimension: usize,
    pub record_count: usize,
    pub region_count: usize,
    pub masker_id: String,
    /// File name → hex SHA-256.
    pub checksums: BTreeMap<String, String>,
}

impl Manifest {
    /// SHA-256 over the manifest's own serialization.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("manifest serializes")))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(dir: &Path) -> Result<Self, CorpusError> {
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CorpusError::Locked(path.display().to_string()))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("store types serialize");
    v.push(b'\n');
    v
}

/// Writes `corpus` into `dir`, creating it if needed. Holds the ingest lock
/// for the duration.
pub fn save(corpus: &Corpus, masker_id: &str, dir: &Path) -> Result<Manifest, CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let _lock = LockGuard::acquire(dir)?;

    let records: Vec<StoredRecord> = corpus
        .records()
        .iter()
        .map(|r| StoredRecord {
            id: r.id.clone(),
            name: r.name.clone(),
            category: r.category,
            geometry: r.geometry.clone(),
            reviews: r.reviews.clone(),
            spatial_summary: r.spatial_summary.clone(),
            semantic_summary: r.semantic_summary.clone(),
        })
        .collect();
    let records_bytes = to_json(&records);
    let gazetteer_bytes = to_json(&corpus.gazetteer().entries());
    let mut vector_bytes = Vec::with_capacity(corpus.len() * corpus.dimension() * 8);
    for r in corpus.records() {
        for v in [&r.spatial_vec, &r.semantic_vec] {
            for x in v.values() {
                vector_bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
    }

    let manifest = Manifest {
        format_version: STORE_FORMAT_VERSION,
        embedder_id: corpus.embedder_id().to_string(),
        dimension: corpus.dimension(),
        record_count: corpus.len(),
        region_count: corpus.gazetteer().len(),
        masker_id: masker_id.to_string(),
        checksums: [
            (RECORDS, &records_bytes),
            (GAZETTEER, &gazetteer_bytes),
            (VECTORS, &vector_bytes),
        ]
        .into_iter()
        .map(|(name, bytes)| (name.to_string(), sha256_hex(bytes)))
        .collect(),
    };
    write_atomic(&dir.join(RECORDS), &records_bytes)?;
    write_atomic(&dir.join(GAZETTEER), &gazetteer_bytes)?;
    write_atomic(&dir.join(VECTORS), &vector_bytes)?;
    write_atomic(&dir.join(MANIFEST), &to_json(&manifest))?;
    log::info!("stored {} records, {} regions in {}", manifest.record_count, manifest.region_count, dir.display());
    Ok(manifest)
}

/// Reads the POI and gazetteer files, preprocesses every record and writes
/// the store.
pub fn ingest(
    poi_file: &Path,
    gazetteer_file: Option<&Path>,
    embedder: &dyn Embedder,
    masker: &dyn MaskingView,
    store_dir: &Path,
) -> Result<(Corpus, Manifest), CorpusError> {
    let pois = read_pois(poi_file)?;
    let gazetteer = match gazetteer_file {
        Some(p) => read_gazetteer(p)?,
        None => Gazetteer::default(),
    };
    let corpus = Corpus::build(pois, gazetteer, embedder, masker)?;
    let manifest = save(&corpus, &masker.id(), store_dir)?;
    Ok((corpus, manifest))
}

fn read_checked(dir: &Path, name: &str, manifest: &Manifest) -> Result<Vec<u8>, CorpusError> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    match manifest.checksums.get(name) {
        Some(sum) if *sum == sha256_hex(&bytes) => Ok(bytes),
        _ => Err(CorpusError::Checksum(name.to_string())),
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CorpusError> {
    let path = dir.join(MANIFEST);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CorpusError::Corrupt(format!("{MANIFEST}: {e}")))?;
    let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != STORE_FORMAT_VERSION {
        return Err(CorpusError::Version {
            found,
            expected: STORE_FORMAT_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| CorpusError::Corrupt(format!("{MANIFEST}: {e}")))
}

/// Opens a store read-only and rebuilds the spatial index in memory.
pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
    let manifest = read_manifest(dir)?;
    let records: Vec<StoredRecord> = serde_json::from_slice(&read_checked(dir, RECORDS, &manifest)?)
        .map_err(|e| CorpusError::Corrupt(format!("{RECORDS}: {e}")))?;
    let regions: Vec<GazetteerEntry> = serde_json::from_slice(&read_checked(dir, GAZETTEER, &manifest)?)
        .map_err(|e| CorpusError::Corrupt(format!("{GAZETTEER}: {e}")))?;
    let vectors = read_checked(dir, VECTORS, &manifest)?;

    let d = manifest.dimension;
    if records.len() != manifest.record_count || vectors.len() != records.len() * d * 8 {
        return Err(CorpusError::Corrupt(format!(
            "expected {} records of dimension {d}, found {} records and {} vector bytes",
            manifest.record_count,
            records.len(),
            vectors.len()
        )));
    }
    let mut floats = vectors
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut next_vec = || {
        let values: Vec<f32> = floats.by_ref().take(d).collect();
        EmbeddingVector::new(values).map_err(|_| CorpusError::Corrupt(format!("{VECTORS}: non-finite value")))
    };
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let spatial_vec = next_vec()?;
        let semantic_vec = next_vec()?;
        out.push(PoiRecord {
            id: r.id,
            name: r.name,
            category: r.category,
            geometry: r.geometry,
            reviews: r.reviews,
            spatial_summary: r.spatial_summary,
            semantic_summary: r.semantic_summary,
            spatial_vec,
            semantic_vec,
        });
    }
    Corpus::new(out, Gazetteer::new(regions)?, manifest.embedder_id, d)
}
