use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;
use crate::ranking::RerankCandidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    SpatialExtract,
    IntentExtract,
    Rerank,
}

impl TemplateName {
    pub const ALL: [TemplateName; 3] = [Self::SpatialExtract, Self::IntentExtract, Self::Rerank];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SpatialExtract => "spatial_extract",
            Self::IntentExtract => "intent_extract",
            Self::Rerank => "rerank",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const SPATIAL_BODY: &str = include_str!("../../assets/prompts/spatial_extract.txt");
const INTENT_BODY: &str = include_str!("../../assets/prompts/intent_extract.txt");
const RERANK_BODY: &str = include_str!("../../assets/prompts/rerank.txt");

pub const P_USER_QUERY: &str = "user_query";
pub const P_LOCATION_COUNT: &str = "location_count";
pub const P_IS_MULTI_POINT: &str = "is_multi_point";
pub const P_ONE_POINT: &str = "location_count == 1";
pub const P_TWO_POINTS: &str = "location_count == 2";
pub const P_MANY_POINTS: &str = "location_count > 2";
pub const P_REGION_NAMES: &str = "', '.join(region_names['nta_names'])";
pub const P_BOROUGH_NAMES: &str = "', '.join(region_names['boro_names'])";
pub const P_SPATIAL_CONSTRAINTS: &str = "query_constraints['spatial_constraints']";
pub const P_USER_CONSTRAINTS: &str = "query_constraints['user_constraints']";
pub const P_PLACES: &str = "json.dumps(places, ensure_ascii=False, indent=2)";
pub const P_PLACE_COUNT: &str = "len(places)";

/// A prompt body with `{expression}` placeholders. Braces around anything
/// that is not one of the template's placeholders are literal text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: &'static str,
}

impl PromptTemplate {
    pub fn get(name: TemplateName) -> Self {
        let body = match name {
            TemplateName::SpatialExtract => SPATIAL_BODY,
            TemplateName::IntentExtract => INTENT_BODY,
            TemplateName::Rerank => RERANK_BODY,
        };
        Self { name, body }
    }

    pub fn placeholders(&self) -> &'static [&'static str] {
        match self.name {
            TemplateName::SpatialExtract => &[
                P_USER_QUERY,
                P_LOCATION_COUNT,
                P_IS_MULTI_POINT,
                P_ONE_POINT,
                P_TWO_POINTS,
                P_MANY_POINTS,
                P_REGION_NAMES,
                P_BOROUGH_NAMES,
            ],
            TemplateName::IntentExtract => &[P_USER_QUERY],
            TemplateName::Rerank => &[P_SPATIAL_CONSTRAINTS, P_USER_CONSTRAINTS, P_PLACES, P_PLACE_COUNT],
        }
    }

    /// Placeholder expressions in order of appearance, repeats included.
    pub fn occurrences(&self) -> Vec<&'static str> {
        let known = self.placeholders();
        let mut out = Vec::new();
        scan(self.body, |inner| {
            let hit = known.iter().find(|k| **k == inner).copied();
            if let Some(k) = hit {
                out.push(k);
            }
            hit.map(|_| String::new())
        });
        out
    }

    pub fn render(&self, bindings: &Bindings) -> Result<String, GatewayError> {
        let known = self.placeholders();
        if let Some(missing) = known.iter().find(|k| !bindings.0.contains_key(**k)) {
            return Err(GatewayError::Unbound {
                template: self.name,
                placeholder: missing.to_string(),
            });
        }
        Ok(scan(self.body, |inner| {
            known.contains(&inner).then(|| bindings.0[inner].clone())
        }))
    }
}

/// Copies `body`, replacing each `{inner}` for which `f` returns a value.
fn scan(body: &str, mut f: impl FnMut(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| f(&after[..close]).map(|v| (v, close)));
        match replaced {
            Some((value, close)) => {
                out.push_str(&value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Placeholder values, rendered as the prompt's original formatting code
/// would render them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn set(&mut self, placeholder: &str, value: impl Into<String>) -> &mut Self {
        self.0.insert(placeholder.to_string(), value.into());
        self
    }

    pub fn get(&self, placeholder: &str) -> Option<&str> {
        self.0.get(placeholder).map(String::as_str)
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.0 {
            h.update((k.len() as u64).to_le_bytes());
            h.update(k.as_bytes());
            h.update((v.len() as u64).to_le_bytes());
            h.update(v.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn py_optional(s: &str) -> String {
    if s.trim().is_empty() {
        "None".to_string()
    } else {
        s.to_string()
    }
}

pub fn spatial_bindings(
    question: &str,
    location_count: usize,
    region_names: &[&str],
    borough_names: &[&str],
) -> Bindings {
    let mut b = Bindings::default();
    b.set(P_USER_QUERY, question)
        .set(P_LOCATION_COUNT, location_count.to_string())
        .set(P_IS_MULTI_POINT, py_bool(location_count > 1))
        .set(P_ONE_POINT, py_bool(location_count == 1))
        .set(P_TWO_POINTS, py_bool(location_count == 2))
        .set(P_MANY_POINTS, py_bool(location_count > 2))
        .set(P_REGION_NAMES, region_names.join(", "))
        .set(P_BOROUGH_NAMES, borough_names.join(", "));
    b
}

pub fn intent_bindings(question: &str) -> Bindings {
    let mut b = Bindings::default();
    b.set(P_USER_QUERY, question);
    b
}

#[derive(Serialize)]
struct Place<'a> {
    index: usize,
    name: &'a str,
    distance_km: f64,
    spatial_score: f64,
    description: &'a str,
}

pub fn rerank_bindings(spatial_constraints: &str, user_constraints: &str, places: &[RerankCandidate]) -> Bindings {
    let places: Vec<Place> = places
        .iter()
        .enumerate()
        .map(|(index, c)| Place {
            index,
            name: &c.name,
            distance_km: (c.distance_km * 1000.0).round() / 1000.0,
            spatial_score: (c.f_sparse * 1e4).round() / 1e4,
            description: &c.description,
        })
        .collect();
    let mut b = Bindings::default();
    b.set(P_SPATIAL_CONSTRAINTS, py_optional(spatial_constraints))
        .set(P_USER_CONSTRAINTS, py_optional(user_constraints))
        .set(P_PLACES, serde_json::to_string_pretty(&places).expect("places serialize"))
        .set(P_PLACE_COUNT, places.len().to_string());
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholder_sets_match_template_bodies() {
        for name in TemplateName::ALL {
            let t = PromptTemplate::get(name);
            let mut seen: Vec<&str> = t.occurrences();
            seen.sort();
            seen.dedup();
            let mut declared = t.placeholders().to_vec();
            declared.sort();
            assert_eq!(seen, declared, "{name}");
        }
    }

    #[test]
    fn rendering_substitutes_only_placeholders() {
        let t = PromptTemplate::get(TemplateName::SpatialExtract);
        let out = t.render(&spatial_bindings("cafe near \"X\"", 1, &["Chelsea", "SoHo"], &["Manhattan"])).unwrap();
        assert!(out.starts_with("Analyze the following user query and extract spatial information: \"cafe near \"X\"\""));
        assert!(out.contains("- Multiple points detected: False"));
        assert!(out.contains("1. For single location point (True):"));
        assert!(out.contains("Community/Sub-region names: Chelsea, SoHo"));
        assert!(out.contains("Borough names: Manhattan"));
        // the JSON shape stays literal
        assert!(out.contains("{\n    \"query_type\": \"point\" | \"route\" | \"region\","));
        assert!(!out.contains("{location_count"));
    }

    #[test]
    fn missing_binding_is_an_error() {
        let t = PromptTemplate::get(TemplateName::Rerank);
        let err = t.render(&intent_bindings("q")).unwrap_err();
        assert!(matches!(err, GatewayError::Unbound { template: TemplateName::Rerank, .. }));
    }

    #[test]
    fn rerank_places_are_pretty_json() {
        let places = [RerankCandidate {
            poi_id: "p1".into(),
            name: "Café Ü".into(),
            description: "Good".into(),
            f_sparse: 0.666_666,
            distance_km: 0.5,
        }];
        let out = PromptTemplate::get(TemplateName::Rerank)
            .render(&rerank_bindings("near the park", "", &places))
            .unwrap();
        assert!(out.contains("- User Preferences: None\n"));
        assert!(out.contains("[\n  {\n    \"index\": 0,\n    \"name\": \"Café Ü\",\n    \"distance_km\": 0.5,\n    \"spatial_score\": 0.6667,"));
        assert!(out.contains("input place count (1)."));
    }

    #[test]
    fn digest_is_order_independent_and_value_sensitive() {
        let mut a = Bindings::default();
        a.set("x", "1").set("y", "2");
        let mut b = Bindings::default();
        b.set("y", "2").set("x", "1");
        assert_eq!(a.digest(), b.digest());
        b.set("x", "12");
        assert_ne!(a.digest(), b.digest());
    }
}
