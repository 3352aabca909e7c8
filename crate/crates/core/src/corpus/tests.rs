use std::fs;

use serde_json::json;
use tempfile::TempDir;

use super::*;
use crate::retrieval::{HashEmbedder, LexiconMasker};

fn write(dir: &TempDir, name: &str, value: serde_json::Value) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    p
}

fn fixture(dir: &TempDir) -> (std::path::PathBuf, std::path::PathBuf) {
    let pois = json!({"type": "FeatureCollection", "features": [
        {"type": "Feature", "geometry": {"type": "Point", "coordinates": [-73.9855, 40.758]},
         "properties": {"id": "ts", "name": "Times Square", "category": "attraction",
                        "reviews": ["Crowded but fun.", "Right near the subway exit."]}},
        {"type": "Feature", "geometry": {"type": "Point", "coordinates": [-73.984, 40.759]},
         "properties": {"id": "r1", "name": "Joe's Pizza", "category": "restaurant"}},
        {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[-73.99, 40.75], [-73.98, 40.76]]},
         "properties": {"id": "w1", "name": "High Walk", "category": "attraction", "reviews": ["A long walk."]}}
    ]});
    let gaz = json!({"type": "FeatureCollection", "features": [
        {"type": "Feature",
         "geometry": {"type": "Polygon", "coordinates": [[[-74.02, 40.70], [-73.93, 40.70], [-73.93, 40.88], [-74.02, 40.88], [-74.02, 40.70]]]},
         "properties": {"name": "Manhattan", "aliases": ["New York County"]}}
    ]});
    (write(dir, "pois.geojson", pois), write(dir, "regions.geojson", gaz))
}

#[test]
fn ingest_load_round_trip_and_idempotence() {
    let tmp = TempDir::new().unwrap();
    let (pois, gaz) = fixture(&tmp);
    let store = tmp.path().join("store");
    let e = HashEmbedder::default();
    let (built, m1) = ingest(&pois, Some(&gaz), &e, &LexiconMasker, &store).unwrap();
    let bytes1 = fs::read(store.join("vectors.bin")).unwrap();
    let (_, m2) = ingest(&pois, Some(&gaz), &e, &LexiconMasker, &store).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(m1.fingerprint(), m2.fingerprint());
    assert_eq!(bytes1, fs::read(store.join("vectors.bin")).unwrap());
    assert_eq!(bytes1.len(), 3 * 2 * 256 * 4);
    assert!(!store.join("ingest.lock").exists());

    let loaded = load(&store).unwrap();
    assert_eq!(loaded, built);
    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded.find_by_name("times square").unwrap().0, "ts");
    assert!(loaded.gazetteer().get("new york county").is_some());

    let ts = loaded.get("ts").unwrap();
    assert_eq!(ts.spatial_summary, "Right near the subway exit.");
    assert_eq!(ts.semantic_summary, "Times Square attraction Crowded but fun.");
    // no reviews: views come from name and category alone
    let r1 = loaded.get("r1").unwrap();
    assert_eq!(r1.semantic_summary, "Joe's Pizza restaurant");
    assert_eq!(r1.spatial_summary, "");
}

#[test]
fn empty_poi_file_gives_a_valid_empty_store() {
    let tmp = TempDir::new().unwrap();
    let pois = write(&tmp, "p.geojson", json!({"type": "FeatureCollection", "features": []}));
    let store = tmp.path().join("s");
    let (k, m) = ingest(&pois, None, &HashEmbedder::default(), &LexiconMasker, &store).unwrap();
    assert!(k.is_empty());
    assert_eq!(m.record_count, 0);
    assert!(load(&store).unwrap().is_empty());
}

#[test]
fn load_rejects_missing_tampered_and_foreign_stores() {
    let tmp = TempDir::new().unwrap();
    assert!(matches!(load(&tmp.path().join("nope")), Err(CorpusError::Io { .. })));

    let (pois, gaz) = fixture(&tmp);
    let store = tmp.path().join("store");
    ingest(&pois, Some(&gaz), &HashEmbedder::default(), &LexiconMasker, &store).unwrap();

    let vec_path = store.join("vectors.bin");
    let mut bytes = fs::read(&vec_path).unwrap();
    bytes[10] ^= 0xff;
    fs::write(&vec_path, &bytes).unwrap();
    assert!(matches!(load(&store), Err(CorpusError::Checksum(f)) if f == "vectors.bin"));
    bytes[10] ^= 0xff;
    fs::write(&vec_path, &bytes).unwrap();
    load(&store).unwrap();

    let man_path = store.join("manifest.json");
    let text = fs::read_to_string(&man_path).unwrap();
    fs::write(&man_path, text.replace("\"format_version\": 1", "\"format_version\": 99")).unwrap();
    assert!(matches!(load(&store), Err(CorpusError::Version { found: 99, expected: 1 })));
}

#[test]
fn concurrent_ingest_is_refused() {
    let tmp = TempDir::new().unwrap();
    let (pois, _) = fixture(&tmp);
    let store = tmp.path().join("store");
    fs::create_dir_all(&store).unwrap();
    fs::write(store.join("ingest.lock"), "").unwrap();
    let err = ingest(&pois, None, &HashEmbedder::default(), &LexiconMasker, &store).unwrap_err();
    assert!(matches!(err, CorpusError::Locked(_)));
}

#[test]
fn qa_pairs_check_references() {
    let tmp = TempDir::new().unwrap();
    let (pois, _) = fixture(&tmp);
    let store = tmp.path().join("store");
    let (k, _) = ingest(&pois, None, &HashEmbedder::default(), &LexiconMasker, &store).unwrap();

    let qa = tmp.path().join("qa.jsonl");
    fs::write(
        &qa,
        "{\"question\": \"pizza near Times Square\", \"reference_spec\": \"Times Square\", \"relevant_ids\": [\"r1\"]}\n\n\
         {\"question\": \"x\", \"reference_spec\": [\"-73.98, 40.75\", \"Times Square\"], \"relevant_ids\": [\"ts\"]}\n",
    )
    .unwrap();
    let pairs = read_qa_pairs(&qa, &k).unwrap();
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[0].reference_spec, ["Times Square"]);
    assert_eq!(pairs[1].reference_spec.len(), 2);

    fs::write(&qa, "{\"question\": \"x\", \"relevant_ids\": [\"ghost\"]}\n").unwrap();
    let msg = read_qa_pairs(&qa, &k).unwrap_err().to_string();
    assert!(msg.contains("qa.jsonl:1") && msg.contains("ghost"), "{msg}");

    fs::write(&qa, "{\"question\": \"x\", \"relevant_ids\": []}\n").unwrap();
    assert!(read_qa_pairs(&qa, &k).is_err());
}
