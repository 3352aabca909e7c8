use serde::Serialize;
use serde_json::{Map, Value};

use super::TemplateName;
use crate::category::Category;
use crate::query::QueryKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialExtraction {
    pub query_type: QueryKind,
    pub region: Option<String>,
    pub distance_km: Option<f64>,
    /// Meters.
    pub buffer_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentExtraction {
    pub category: Category,
    pub spatial_constraints: Option<String>,
    pub user_constraints: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parsed {
    Spatial(SpatialExtraction),
    Intent(IntentExtraction),
    Rerank(Vec<usize>),
}

/// Pulls the first JSON value out of a model reply, tolerating code fences,
/// surrounding prose and trailing commas.
pub fn extract_json(raw: &str) -> Result<Value, String> {
    let start = raw.find(['{', '[']).ok_or("no JSON object or array in reply")?;
    let close = if raw.as_bytes()[start] == b'{' { '}' } else { ']' };
    let end = raw.rfind(close).filter(|&e| e > start).ok_or("unterminated JSON")?;
    let text = strip_trailing_commas(&raw[start..=end]);
    serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))
}

fn strip_trailing_commas(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut escaped = false;
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn object(v: &Value) -> Result<&Map<String, Value>, String> {
    v.as_object().ok_or_else(|| "expected a JSON object".to_string())
}

/// String or null; the literal string "null" (and blanks) count as null.
fn opt_string(o: &Map<String, Value>, key: &str) -> Result<Option<String>, String> {
    match o.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() || s.trim().eq_ignore_ascii_case("null") => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.trim().to_string())),
        Some(other) => Err(format!("{key}: expected string or null, got {other}")),
    }
}

fn opt_distance(o: &Map<String, Value>, key: &str) -> Result<Option<f64>, String> {
    match o.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => match n.as_f64() {
            Some(x) if x.is_finite() && x > 0.0 => Ok(Some(x)),
            _ => Err(format!("{key}: expected a positive number, got {n}")),
        },
        Some(other) => Err(format!("{key}: expected number or null, got {other}")),
    }
}

fn spatial(v: &Value) -> Result<SpatialExtraction, String> {
    let o = object(v)?;
    let query_type = match o.get("query_type").and_then(Value::as_str).map(str::trim) {
        Some("point") => QueryKind::PointRadius,
        Some("route") => QueryKind::RouteBuffer,
        Some("region") => QueryKind::RegionContain,
        other => return Err(format!("query_type: expected \"point\", \"route\" or \"region\", got {other:?}")),
    };
    Ok(SpatialExtraction {
        query_type,
        region: opt_string(o, "region")?,
        distance_km: opt_distance(o, "distance_km")?,
        buffer_distance: opt_distance(o, "buffer_distance")?,
    })
}

fn intent(v: &Value) -> Result<IntentExtraction, String> {
    let o = object(v)?;
    let category = match o.get("type").and_then(Value::as_str).map(str::trim) {
        Some("R") => Category::Restaurant,
        Some("H") => Category::Hotel,
        Some("A") => Category::Attraction,
        other => return Err(format!("type: expected \"R\", \"H\" or \"A\", got {other:?}")),
    };
    Ok(IntentExtraction {
        category,
        spatial_constraints: opt_string(o, "spatial_constraints")?,
        user_constraints: opt_string(o, "user_constraints")?,
    })
}

fn rerank(v: &Value) -> Result<Vec<usize>, String> {
    let arr = v.as_array().ok_or("expected a JSON array of indices")?;
    arr.iter()
        .map(|x| {
            x.as_u64()
                .map(|i| i as usize)
                .ok_or_else(|| format!("expected a non-negative integer index, got {x}"))
        })
        .collect()
}

pub fn validate(template: TemplateName, raw: &str) -> Result<Parsed, String> {
    let v = extract_json(raw)?;
    Ok(match template {
        TemplateName::SpatialExtract => Parsed::Spatial(spatial(&v)?),
        TemplateName::IntentExtract => Parsed::Intent(intent(&v)?),
        TemplateName::Rerank => Parsed::Rerank(rerank(&v)?),
    })
}
