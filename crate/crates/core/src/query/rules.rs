use std::sync::OnceLock;

use regex::Regex;

use super::{QueryError, QueryIntent, QueryKind, SpatialQuery};
use crate::corpus::Gazetteer;
use crate::geometry::{Coord, Length};
use crate::lexicon::{detect_category, has_route_cue, split_by_spatial_cue, tokenize};

fn explicit_distance_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(km|kilometers?|kilometres?|m|meters?|metres?|mi|miles?)\b")
            .expect("valid regex")
    })
}

fn block_range_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b\d+\s*(?:-|–|—|to)\s*\d+\s*blocks?\b").expect("valid regex"))
}

fn explicit_distance(question: &str) -> Option<Length> {
    let caps = explicit_distance_re().captures(question)?;
    let value: f64 = caps[1].parse().ok()?;
    if value <= 0.0 {
        return None;
    }
    let unit = caps[2].to_lowercase();
    Some(if unit.starts_with('k') {
        Length::from_km(value)
    } else if unit.starts_with("mi") {
        Length::from_km(value * 1.609_344)
    } else {
        Length::from_meters(value)
    })
}

fn has_phrase(tokens: &[String], phrase: &[&str]) -> bool {
    tokens
        .windows(phrase.len())
        .any(|w| w.iter().zip(phrase).all(|(t, p)| t == p))
}

/// Search radius or buffer width implied by the wording of `question`.
///
/// Point searches: "nearby"/"close" 1 km, "walking distance" 2 km,
/// "not too far" 3 km, an "8–10 blocks" style range 1.5 km. Routes:
/// walking 1000 m, scenic or exploratory 3000 m, otherwise 2000 m. An
/// explicit figure ("within 500 m") overrides the phrase classes. Region
/// queries take no distance.
pub fn estimate_epsilon(question: &str, kind: QueryKind) -> Option<Length> {
    let default = kind.default_eps()?;
    if let Some(explicit) = explicit_distance(question) {
        return Some(explicit);
    }
    let tokens = tokenize(question);
    let any = |words: &[&str]| tokens.iter().any(|t| words.contains(&t.as_str()));
    let eps = match kind {
        QueryKind::PointRadius => {
            if block_range_re().is_match(question) {
                Length::from_km(1.5)
            } else if has_phrase(&tokens, &["not", "too", "far"]) {
                Length::from_km(3.0)
            } else if has_phrase(&tokens, &["walking", "distance"]) {
                Length::from_km(2.0)
            } else if any(&["nearby", "close", "near", "closest", "nearest"]) {
                Length::from_km(1.0)
            } else {
                default
            }
        }
        QueryKind::RouteBuffer => {
            if any(&["scenic", "exploration", "explore", "exploring", "sightseeing"]) {
                Length::from_meters(3000.0)
            } else if any(&["walk", "walking", "walks", "stroll", "foot"]) {
                Length::from_meters(1000.0)
            } else {
                default
            }
        }
        QueryKind::RegionContain => unreachable!("no default distance"),
    };
    Some(eps)
}

pub fn split_intent(question: &str) -> QueryIntent {
    let (spatial_requirement, semantic_requirement) = split_by_spatial_cue(question);
    QueryIntent {
        spatial_requirement,
        semantic_requirement,
        target_category: detect_category(question),
    }
}

/// Deterministic parser following the query-type rules of the spatial
/// extraction prompt:
///
/// * exactly two points and route wording → route buffer;
/// * otherwise an explicitly named gazetteer region → region containment;
/// * otherwise, with at least one point → point radius.
pub fn parse_rule_based(
    question: &str,
    resolved_points: &[Coord],
    gazetteer: &Gazetteer,
) -> Result<(SpatialQuery, QueryIntent), QueryError> {
    if question.trim().is_empty() {
        return Err(QueryError::EmptyQuestion);
    }
    let intent = split_intent(question);
    let category = intent.target_category;
    let region = gazetteer.find_mention(question);

    let query = if resolved_points.len() == 2 && has_route_cue(question) {
        let eps = estimate_epsilon(question, QueryKind::RouteBuffer).expect("route has a default");
        SpatialQuery::route_buffer(resolved_points[0], resolved_points[1], eps, category, question)?
    } else if let Some(region) = region {
        SpatialQuery::region_contain(region.name.clone(), region.polygon.clone(), category, question)?
    } else if !resolved_points.is_empty() {
        let eps = estimate_epsilon(question, QueryKind::PointRadius).expect("point has a default");
        SpatialQuery::point_radius(resolved_points, eps, category, question)?
    } else {
        return Err(QueryError::UnresolvedReference);
    };
    Ok((query, intent))
}
