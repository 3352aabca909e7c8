use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{CorpusError, Gazetteer, GazetteerEntry};
use crate::category::Category;
use crate::geometry::Geometry;

/// A POI as read from the input collection, before preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiInput {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub geometry: Geometry,
    pub reviews: Vec<String>,
}

#[derive(Deserialize)]
struct PoiProps {
    id: Value,
    name: String,
    category: String,
    #[serde(default)]
    reviews: Vec<String>,
}

#[derive(Deserialize)]
struct RegionProps {
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
}

fn read_json(path: &Path) -> Result<Value, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::record(path.display().to_string(), e))
}

/// Features of a FeatureCollection with their locators.
fn features(path: &Path, doc: &Value) -> Result<Vec<(String, Value, Value)>, CorpusError> {
    let file = path.display().to_string();
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(CorpusError::record(file, "expected a GeoJSON FeatureCollection"));
    }
    let Some(feats) = doc.get("features").and_then(Value::as_array) else {
        return Err(CorpusError::record(file, "missing \"features\" array"));
    };
    Ok(feats
        .iter()
        .enumerate()
        .map(|(i, f)| {
            (
                format!("{file}: features[{i}]"),
                f.get("geometry").cloned().unwrap_or(Value::Null),
                f.get("properties").cloned().unwrap_or(Value::Null),
            )
        })
        .collect())
}

fn parse_geometry(locator: &str, v: Value) -> Result<Geometry, CorpusError> {
    let g: Geometry = serde_json::from_value(v).map_err(|e| CorpusError::record(locator, format!("geometry: {e}")))?;
    g.validate().map_err(|e| CorpusError::record(locator, e))?;
    Ok(g)
}

pub fn parse_pois(path: &Path, doc: &Value) -> Result<Vec<PoiInput>, CorpusError> {
    let mut out = Vec::new();
    for (loc, geom, props) in features(path, doc)? {
        let props: PoiProps =
            serde_json::from_value(props).map_err(|e| CorpusError::record(&loc, format!("properties: {e}")))?;
        let id = match props.id {
            Value::String(s) if !s.trim().is_empty() => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            _ => return Err(CorpusError::record(&loc, "id must be a non-empty string or a number")),
        };
        let loc = format!("{loc} (id {id})");
        let category: Category = props.category.parse().map_err(|e| CorpusError::record(&loc, e))?;
        let geometry = parse_geometry(&loc, geom)?;
        out.push(PoiInput {
            id,
            name: props.name,
            category,
            geometry,
            reviews: props.reviews,
        });
    }
    let mut seen = std::collections::HashSet::new();
    for p in &out {
        if !seen.insert(p.id.as_str()) {
            return Err(CorpusError::DuplicateId(p.id.clone()));
        }
    }
    Ok(out)
}

pub fn read_pois(path: &Path) -> Result<Vec<PoiInput>, CorpusError> {
    parse_pois(path, &read_json(path)?)
}

pub fn read_gazetteer(path: &Path) -> Result<Gazetteer, CorpusError> {
    let doc = read_json(path)?;
    let mut entries = Vec::new();
    for (loc, geom, props) in features(path, &doc)? {
        let props: RegionProps =
            serde_json::from_value(props).map_err(|e| CorpusError::record(&loc, format!("properties: {e}")))?;
        let polygon = parse_geometry(&loc, geom)?;
        entries.push(GazetteerEntry {
            name: props.name,
            aliases: props.aliases,
            polygon,
        });
    }
    Ok(Gazetteer::new(entries)?)
}

/// The FeatureCollection form read by [`read_pois`].
pub fn pois_to_geojson(pois: &[PoiInput]) -> Value {
    let features: Vec<Value> = pois
        .iter()
        .map(|p| {
            serde_json::json!({
                "type": "Feature",
                "geometry": p.geometry,
                "properties": {"id": p.id, "name": p.name, "category": p.category, "reviews": p.reviews},
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}

/// The FeatureCollection form read by [`read_gazetteer`].
pub fn gazetteer_to_geojson(gazetteer: &Gazetteer) -> Value {
    let features: Vec<Value> = gazetteer
        .entries()
        .iter()
        .map(|e| {
            serde_json::json!({
                "type": "Feature",
                "geometry": e.polygon,
                "properties": {"name": e.name, "aliases": e.aliases},
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc(features: Value) -> Value {
        json!({"type": "FeatureCollection", "features": features})
    }

    #[test]
    fn parses_points_and_defaults_reviews() {
        let d = doc(json!([{
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [-73.98, 40.75]},
            "properties": {"id": 7, "name": "Joe's", "category": "cafe"}
        }]));
        let pois = parse_pois(Path::new("p.geojson"), &d).unwrap();
        assert_eq!(pois[0].id, "7");
        assert_eq!(pois[0].category, Category::Restaurant);
        assert!(pois[0].reviews.is_empty());
    }

    #[test]
    fn errors_carry_locators() {
        let bad_cat = doc(json!([{
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [0, 0]},
            "properties": {"id": "a", "name": "x", "category": "spaceport"}
        }]));
        let msg = parse_pois(Path::new("p.geojson"), &bad_cat).unwrap_err().to_string();
        assert!(msg.contains("features[0] (id a)") && msg.contains("spaceport"), "{msg}");

        let bad_geom = doc(json!([
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [0, 0]},
             "properties": {"id": "a", "name": "x", "category": "hotel"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [0, 95]},
             "properties": {"id": "b", "name": "y", "category": "hotel"}}
        ]));
        let msg = parse_pois(Path::new("p.geojson"), &bad_geom).unwrap_err().to_string();
        assert!(msg.contains("features[1] (id b)"), "{msg}");

        let dup = doc(json!([
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [0, 0]},
             "properties": {"id": "a", "name": "x", "category": "hotel"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": [1, 0]},
             "properties": {"id": "a", "name": "y", "category": "hotel"}}
        ]));
        assert!(matches!(parse_pois(Path::new("p"), &dup), Err(CorpusError::DuplicateId(id)) if id == "a"));

        assert!(parse_pois(Path::new("p"), &json!({"type": "Feature"})).is_err());
    }
}
