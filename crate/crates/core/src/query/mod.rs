//! Structured spatial queries: the query function, reference geometries,
//! target selector and distance parameter, plus the parsers that build
//! them from text.

pub mod dsl;
mod resolve;
mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::Category;
use crate::geometry::{Coord, Geometry, GeometryError, Length};

pub use dsl::{parse_dsl, DslError, DslQuery};
pub use resolve::{resolve_geometry, NameLookup, Resolved, ResolvedFrom};
pub use rules::{estimate_epsilon, parse_rule_based, split_intent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("no reference location could be resolved from the question")]
    UnresolvedReference,
    #[error("{0:?} does not name a known place, region or coordinate")]
    NotFound(String),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    PointRadius,
    RouteBuffer,
    RegionContain,
}

impl QueryKind {
    /// Distance used when the question carries no cue.
    pub fn default_eps(self) -> Option<Length> {
        match self {
            Self::PointRadius => Some(Length::from_km(1.0)),
            Self::RouteBuffer => Some(Length::from_meters(2000.0)),
            Self::RegionContain => None,
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PointRadius => "point",
            Self::RouteBuffer => "route",
            Self::RegionContain => "region",
        })
    }
}

/// A validated spatial query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialQuery {
    kind: QueryKind,
    references: Vec<Geometry>,
    target_category: Option<Category>,
    eps: Option<Length>,
    region_name: Option<String>,
    raw_question: String,
}

fn positive(eps: Length) -> Result<Length, QueryError> {
    if eps.km() > 0.0 && eps.km().is_finite() {
        Ok(eps)
    } else {
        Err(QueryError::Invalid(format!("distance must be positive, got {} km", eps.km())))
    }
}

impl SpatialQuery {
    pub fn point_radius(
        points: &[Coord],
        eps: Length,
        target_category: Option<Category>,
        raw_question: impl Into<String>,
    ) -> Result<Self, QueryError> {
        if points.is_empty() {
            return Err(QueryError::UnresolvedReference);
        }
        Ok(Self {
            kind: QueryKind::PointRadius,
            references: points.iter().map(|&c| Geometry::Point(c)).collect(),
            target_category,
            eps: Some(positive(eps)?),
            region_name: None,
            raw_question: raw_question.into(),
        })
    }

    pub fn route_buffer(
        start: Coord,
        end: Coord,
        eps: Length,
        target_category: Option<Category>,
        raw_question: impl Into<String>,
    ) -> Result<Self, QueryError> {
        Ok(Self {
            kind: QueryKind::RouteBuffer,
            references: vec![Geometry::Point(start), Geometry::Point(end)],
            target_category,
            eps: Some(positive(eps)?),
            region_name: None,
            raw_question: raw_question.into(),
        })
    }

    pub fn region_contain(
        region_name: impl Into<String>,
        region: Geometry,
        target_category: Option<Category>,
        raw_question: impl Into<String>,
    ) -> Result<Self, QueryError> {
        if !region.is_areal() {
            return Err(GeometryError::NotAreal(region.type_name()).into());
        }
        Ok(Self {
            kind: QueryKind::RegionContain,
            references: vec![region],
            target_category,
            eps: None,
            region_name: Some(region_name.into()),
            raw_question: raw_question.into(),
        })
    }

    pub fn kind(&self) -> QueryKind {
        self.kind
    }

    pub fn references(&self) -> &[Geometry] {
        &self.references
    }

    pub fn target_category(&self) -> Option<Category> {
        self.target_category
    }

    pub fn eps(&self) -> Option<Length> {
        self.eps
    }

    pub fn region_name(&self) -> Option<&str> {
        self.region_name.as_deref()
    }

    pub fn raw_question(&self) -> &str {
        &self.raw_question
    }

    pub fn with_raw_question(mut self, q: impl Into<String>) -> Self {
        self.raw_question = q.into();
        self
    }

    /// The reference footprints the candidate search runs against: the
    /// points themselves, the straight segment of a route, or the region.
    pub fn search_geometries(&self) -> Vec<Geometry> {
        match self.kind {
            QueryKind::RouteBuffer => {
                let coords: Vec<Coord> = self
                    .references
                    .iter()
                    .map(|g| match g {
                        Geometry::Point(c) => *c,
                        other => other.anchor(),
                    })
                    .collect();
                match Geometry::polyline(coords) {
                    Ok(line) => vec![line],
                    // both ends coincide
                    Err(_) => vec![self.references[0].clone()],
                }
            }
            _ => self.references.clone(),
        }
    }

    /// One-line rendering in the query DSL.
    pub fn to_dsl(&self) -> String {
        let coord = |g: &Geometry| {
            let c = g.anchor();
            format!("{},{}", c.lon(), c.lat())
        };
        let mut out = match self.kind {
            QueryKind::PointRadius => format!(
                "point({}) radius {}km",
                self.references.iter().map(coord).collect::<Vec<_>>().join(" ; "),
                self.eps.map_or(0.0, Length::km)
            ),
            QueryKind::RouteBuffer => format!(
                "route({}) buffer {}m",
                self.references.iter().map(coord).collect::<Vec<_>>().join(" ; "),
                self.eps.map_or(0.0, Length::meters)
            ),
            QueryKind::RegionContain => {
                format!("region({:?})", self.region_name.as_deref().unwrap_or(""))
            }
        };
        if let Some(c) = self.target_category {
            out.push_str(&format!(" category {c}"));
        }
        out
    }
}

/// The textual spatial / semantic requirements of a question.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryIntent {
    pub spatial_requirement: String,
    pub semantic_requirement: String,
    pub target_category: Option<Category>,
}

/// How the candidate set is computed against the index.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidatePlan {
    /// Objects within `eps_km` of any reference (intersecting ones at 0).
    WithinDistance {
        references: Vec<Geometry>,
        eps_km: f64,
        category: Option<Category>,
    },
    /// Objects entirely inside the region.
    Contained {
        region: Geometry,
        category: Option<Category>,
    },
}

pub fn to_candidate_query(sq: &SpatialQuery) -> CandidatePlan {
    match sq.kind {
        QueryKind::PointRadius | QueryKind::RouteBuffer => CandidatePlan::WithinDistance {
            references: sq.search_geometries(),
            eps_km: sq.eps.map_or(0.0, Length::km),
            category: sq.target_category,
        },
        QueryKind::RegionContain => CandidatePlan::Contained {
            region: sq.references[0].clone(),
            category: sq.target_category,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;

    fn c(lon: f64, lat: f64) -> Coord {
        Coord::new(lon, lat).unwrap()
    }

    #[test]
    fn point_radius_plan() {
        let sq = SpatialQuery::point_radius(&[c(-73.98, 40.75)], Length::from_km(1.0), None, "q").unwrap();
        match to_candidate_query(&sq) {
            CandidatePlan::WithinDistance { references, eps_km, .. } => {
                assert_eq!(references, vec![Geometry::Point(c(-73.98, 40.75))]);
                assert_eq!(eps_km, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn route_plan_is_a_straight_polyline_buffer() {
        let sq = SpatialQuery::route_buffer(
            c(-74.0, 40.74),
            c(-73.99, 40.76),
            Length::from_meters(500.0),
            Some(Category::Restaurant),
            "q",
        )
        .unwrap();
        match to_candidate_query(&sq) {
            CandidatePlan::WithinDistance { references, eps_km, category } => {
                assert_eq!(references.len(), 1);
                assert_eq!(references[0].type_name(), "LineString");
                assert!((eps_km - 0.5).abs() < 1e-12);
                assert_eq!(category, Some(Category::Restaurant));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            sq.to_dsl(),
            "route(-74,40.74 ; -73.99,40.76) buffer 500m category restaurant"
        );
    }

    #[test]
    fn region_plan_is_containment() {
        let poly = Geometry::Polygon(Polygon::rect(-74.02, 40.70, -73.93, 40.88).unwrap());
        let sq = SpatialQuery::region_contain("manhattan", poly.clone(), None, "q").unwrap();
        assert_eq!(sq.eps(), None);
        assert_eq!(
            to_candidate_query(&sq),
            CandidatePlan::Contained {
                region: poly,
                category: None
            }
        );
    }

    #[test]
    fn constructor_invariants() {
        assert_eq!(
            SpatialQuery::point_radius(&[], Length::from_km(1.0), None, "q").unwrap_err(),
            QueryError::UnresolvedReference
        );
        assert!(SpatialQuery::point_radius(&[c(0.0, 0.0)], Length::from_km(0.0), None, "q").is_err());
        assert!(SpatialQuery::region_contain("x", Geometry::Point(c(0.0, 0.0)), None, "q").is_err());
    }
}
