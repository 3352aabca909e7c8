//! GeoJSON geometry objects (RFC 7946) as the wire form of [`Geometry`].

use serde::{Deserialize, Serialize};

use super::{Coord, Geometry, GeometryError, LineString, Polygon};

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", content = "coordinates")]
pub(crate) enum GeoJsonGeometry {
    Point(Coord),
    MultiPoint(Vec<Coord>),
    LineString(Vec<Coord>),
    MultiLineString(Vec<Vec<Coord>>),
    Polygon(Vec<Vec<Coord>>),
    MultiPolygon(Vec<Vec<Vec<Coord>>>),
}

fn polygon_from_rings(mut rings: Vec<Vec<Coord>>) -> Result<Polygon, GeometryError> {
    if rings.is_empty() {
        return Err(GeometryError::EmptyCollection("Polygon"));
    }
    let exterior = rings.remove(0);
    Polygon::new(exterior, rings)
}

fn polygon_rings(p: Polygon) -> Vec<Vec<Coord>> {
    let mut rings = vec![p.exterior];
    rings.extend(p.holes);
    rings
}

impl TryFrom<GeoJsonGeometry> for Geometry {
    type Error = GeometryError;

    fn try_from(g: GeoJsonGeometry) -> Result<Self, Self::Error> {
        let geom = match g {
            GeoJsonGeometry::Point(c) => Geometry::Point(c),
            GeoJsonGeometry::MultiPoint(cs) => Geometry::MultiPoint(cs),
            GeoJsonGeometry::LineString(cs) => Geometry::Polyline(LineString::new(cs)?),
            GeoJsonGeometry::MultiLineString(ls) => Geometry::MultiPolyline(
                ls.into_iter().map(LineString::new).collect::<Result<_, _>>()?,
            ),
            GeoJsonGeometry::Polygon(rings) => Geometry::Polygon(polygon_from_rings(rings)?),
            GeoJsonGeometry::MultiPolygon(ps) => Geometry::MultiPolygon(
                ps.into_iter().map(polygon_from_rings).collect::<Result<_, _>>()?,
            ),
        };
        geom.validate()?;
        Ok(geom)
    }
}

impl From<Geometry> for GeoJsonGeometry {
    fn from(g: Geometry) -> Self {
        match g {
            Geometry::Point(c) => Self::Point(c),
            Geometry::MultiPoint(cs) => Self::MultiPoint(cs),
            Geometry::Polyline(l) => Self::LineString(l.0),
            Geometry::MultiPolyline(ls) => Self::MultiLineString(ls.into_iter().map(|l| l.0).collect()),
            Geometry::Polygon(p) => Self::Polygon(polygon_rings(p)),
            Geometry::MultiPolygon(ps) => Self::MultiPolygon(ps.into_iter().map(polygon_rings).collect()),
        }
    }
}
