use std::sync::OnceLock;

use regex::Regex;

use super::QueryError;
use crate::corpus::Gazetteer;
use crate::geometry::{Coord, Geometry};

/// Lookup of stored objects by display name.
pub trait NameLookup {
    /// `(id, geometry)` of the object called `name`, if any.
    fn find_by_name(&self, name: &str) -> Option<(&str, &Geometry)>;
}

impl NameLookup for () {
    fn find_by_name(&self, _name: &str) -> Option<(&str, &Geometry)> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolvedFrom {
    Poi(String),
    Region(String),
    /// Built on the fly from literal coordinates; never stored.
    Temporary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub geometry: Geometry,
    pub from: ResolvedFrom,
}

fn literal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\(?\s*(-?\d+(?:\.\d+)?)\s*[, ]\s*(-?\d+(?:\.\d+)?)\s*\)?$").expect("valid regex")
    })
}

fn parse_literal(token: &str) -> Option<Coord> {
    let caps = literal_re().captures(token.trim())?;
    let lon: f64 = caps[1].parse().ok()?;
    let lat: f64 = caps[2].parse().ok()?;
    Coord::new(lon, lat).ok()
}

/// Resolves a place reference: a stored object by name, then a gazetteer
/// region, then a literal `lon, lat` pair.
pub fn resolve_geometry(token: &str, gazetteer: &Gazetteer, corpus: &dyn NameLookup) -> Result<Resolved, QueryError> {
    let token = token.trim();
    if token.is_empty() {
        return Err(QueryError::NotFound(String::new()));
    }
    if let Some((id, geometry)) = corpus.find_by_name(token) {
        return Ok(Resolved {
            geometry: geometry.clone(),
            from: ResolvedFrom::Poi(id.to_string()),
        });
    }
    if let Some(region) = gazetteer.get(token) {
        return Ok(Resolved {
            geometry: region.polygon.clone(),
            from: ResolvedFrom::Region(region.name.clone()),
        });
    }
    if let Some(c) = parse_literal(token) {
        return Ok(Resolved {
            geometry: Geometry::Point(c),
            from: ResolvedFrom::Temporary,
        });
    }
    Err(QueryError::NotFound(token.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::GazetteerEntry;
    use crate::geometry::Polygon;

    struct OnePoi(Geometry);

    impl NameLookup for OnePoi {
        fn find_by_name(&self, name: &str) -> Option<(&str, &Geometry)> {
            (name.eq_ignore_ascii_case("times square")).then_some(("poi-1", &self.0))
        }
    }

    fn gazetteer() -> Gazetteer {
        Gazetteer::new(vec![GazetteerEntry {
            name: "Manhattan".into(),
            aliases: vec![],
            polygon: Geometry::Polygon(Polygon::rect(-74.02, 40.70, -73.93, 40.88).unwrap()),
        }])
        .unwrap()
    }

    #[test]
    fn lookup_order() {
        let poi = OnePoi(Geometry::point(-73.9855, 40.758).unwrap());
        let g = gazetteer();
        let r = resolve_geometry("Times Square", &g, &poi).unwrap();
        assert_eq!(r.from, ResolvedFrom::Poi("poi-1".into()));
        assert_eq!(r.geometry, poi.0);

        let r = resolve_geometry("Manhattan", &g, &poi).unwrap();
        assert_eq!(r.from, ResolvedFrom::Region("manhattan".into()));
        assert!(r.geometry.is_areal());

        let r = resolve_geometry("(-73.99, 40.75)", &g, &poi).unwrap();
        assert_eq!(r.from, ResolvedFrom::Temporary);
        assert_eq!(r.geometry, Geometry::point(-73.99, 40.75).unwrap());

        assert!(matches!(resolve_geometry("Atlantis", &g, &poi), Err(QueryError::NotFound(_))));
        assert!(matches!(resolve_geometry("(200, 40)", &g, &()), Err(QueryError::NotFound(_))));
    }
}
