//! Geographic footprints and the distance / topology predicates that spatial
//! constraints are built from.
//!
//! Coordinates are WGS84 longitude/latitude in degrees. Point-to-point
//! distance is great-circle (haversine); anything involving a segment is
//! evaluated in a local equirectangular frame centred on the operands, which
//! is accurate to well under a metre at city scale.
//!
//! Topological tests (`intersects`, `contains`) run directly in degree space:
//! the local projection is affine per operand pair, so it preserves
//! incidence.

mod planar;
mod serde_repr;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use planar::Location;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate out of range or not finite: ({lon}, {lat})")]
    InvalidCoord { lon: f64, lat: f64 },
    #[error("{kind} needs at least {min} vertices, got {got}")]
    TooFewVertices {
        kind: &'static str,
        min: usize,
        got: usize,
    },
    #[error("polygon ring is not closed")]
    UnclosedRing,
    #[error("polygon ring intersects itself")]
    SelfIntersectingRing,
    #[error("{0} has no members")]
    EmptyCollection(&'static str),
    #[error("expected a polygon or multipolygon, got {0}")]
    NotAreal(&'static str),
    #[error("distance must be a non-negative number, got {0}")]
    InvalidDistance(f64),
}

/// A lon/lat pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Coord {
    lon: f64,
    lat: f64,
}

impl Coord {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeometryError> {
        let ok = lon.is_finite()
            && lat.is_finite()
            && (-180.0..=180.0).contains(&lon)
            && (-90.0..=90.0).contains(&lat);
        if ok {
            Ok(Self { lon, lat })
        } else {
            Err(GeometryError::InvalidCoord { lon, lat })
        }
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }
}

impl TryFrom<[f64; 2]> for Coord {
    type Error = GeometryError;

    fn try_from([lon, lat]: [f64; 2]) -> Result<Self, Self::Error> {
        Coord::new(lon, lat)
    }
}

impl From<Coord> for [f64; 2] {
    fn from(c: Coord) -> Self {
        [c.lon, c.lat]
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lon, self.lat)
    }
}

/// Great-circle distance between two coordinates in kilometres.
pub fn haversine_km(a: Coord, b: Coord) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// A distance or buffer radius. Stored in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Length(f64);

impl Length {
    pub fn from_km(km: f64) -> Self {
        Self(km)
    }

    pub fn from_meters(m: f64) -> Self {
        Self(m / 1000.0)
    }

    pub fn km(self) -> f64 {
        self.0
    }

    pub fn meters(self) -> f64 {
        self.0 * 1000.0
    }
}

/// An open polyline with at least two distinct consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LineString(Vec<Coord>);

impl LineString {
    /// Consecutive duplicate vertices are dropped before the length check.
    pub fn new(mut coords: Vec<Coord>) -> Result<Self, GeometryError> {
        coords.dedup();
        if coords.len() < 2 {
            return Err(GeometryError::TooFewVertices {
                kind: "polyline",
                min: 2,
                got: coords.len(),
            });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }
}

/// A polygon with an outer ring and optional holes. Rings are closed,
/// have at least four vertices and do not self-intersect.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<Coord>,
    holes: Vec<Vec<Coord>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Coord>, holes: Vec<Vec<Coord>>) -> Result<Self, GeometryError> {
        let exterior = check_ring(exterior)?;
        let holes = holes
            .into_iter()
            .map(check_ring)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { exterior, holes })
    }

    pub fn exterior(&self) -> &[Coord] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Coord>] {
        &self.holes
    }

    pub(crate) fn rings(&self) -> impl Iterator<Item = &[Coord]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Axis-aligned rectangle, mostly useful in tests and fixtures.
    pub fn rect(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Result<Self, GeometryError> {
        let ring = [
            (min_lon, min_lat),
            (max_lon, min_lat),
            (max_lon, max_lat),
            (min_lon, max_lat),
            (min_lon, min_lat),
        ]
        .into_iter()
        .map(|(x, y)| Coord::new(x, y))
        .collect::<Result<Vec<_>, _>>()?;
        Self::new(ring, Vec::new())
    }
}

fn check_ring(mut ring: Vec<Coord>) -> Result<Vec<Coord>, GeometryError> {
    // collapse repeated vertices but keep the closing one
    ring.dedup();
    if ring.len() >= 2 && ring.first() != ring.last() {
        return Err(GeometryError::UnclosedRing);
    }
    if ring.len() < 4 {
        return Err(GeometryError::TooFewVertices {
            kind: "polygon ring",
            min: 4,
            got: ring.len(),
        });
    }
    if planar::ring_self_intersects(&ring) {
        return Err(GeometryError::SelfIntersectingRing);
    }
    Ok(ring)
}

/// The spatial footprint of an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_repr::GeoJsonGeometry", into = "serde_repr::GeoJsonGeometry")]
pub enum Geometry {
    Point(Coord),
    MultiPoint(Vec<Coord>),
    Polyline(LineString),
    MultiPolyline(Vec<LineString>),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

impl Geometry {
    pub fn point(lon: f64, lat: f64) -> Result<Self, GeometryError> {
        Ok(Self::Point(Coord::new(lon, lat)?))
    }

    pub fn polyline(coords: Vec<Coord>) -> Result<Self, GeometryError> {
        Ok(Self::Polyline(LineString::new(coords)?))
    }

    pub fn polygon(exterior: Vec<Coord>, holes: Vec<Vec<Coord>>) -> Result<Self, GeometryError> {
        Ok(Self::Polygon(Polygon::new(exterior, holes)?))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Self::Point(_) => "Point",
            Self::MultiPoint(_) => "MultiPoint",
            Self::Polyline(_) => "LineString",
            Self::MultiPolyline(_) => "MultiLineString",
            Self::Polygon(_) => "Polygon",
            Self::MultiPolygon(_) => "MultiPolygon",
        }
    }

    /// Topological dimension: 0 for points, 1 for lines, 2 for areas.
    pub fn dimension(&self) -> u8 {
        match self {
            Self::Point(_) | Self::MultiPoint(_) => 0,
            Self::Polyline(_) | Self::MultiPolyline(_) => 1,
            Self::Polygon(_) | Self::MultiPolygon(_) => 2,
        }
    }

    pub fn is_areal(&self) -> bool {
        self.dimension() == 2
    }

    /// Rejects empty multi-geometries; every other invariant is enforced
    /// by the constructors of the component types.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let empty = match self {
            Self::MultiPoint(v) => v.is_empty(),
            Self::MultiPolyline(v) => v.is_empty(),
            Self::MultiPolygon(v) => v.is_empty(),
            _ => false,
        };
        if empty {
            Err(GeometryError::EmptyCollection(self.type_name()))
        } else {
            Ok(())
        }
    }

    pub fn bbox(&self) -> BBox {
        let mut coords = self.coords();
        let first = coords.next().expect("validated geometry has a vertex");
        let mut b = BBox::from_coord(first);
        for c in coords {
            b.extend(c);
        }
        b
    }

    /// A point guaranteed to be a vertex or the first coordinate; used to
    /// anchor labels and point-only consumers.
    pub fn anchor(&self) -> Coord {
        match self {
            Self::Point(c) => *c,
            Self::Polygon(_) | Self::MultiPolygon(_) => {
                let b = self.bbox();
                let centre = b.center();
                if matches!(contains(self, &Geometry::Point(centre)), Ok(true)) {
                    centre
                } else {
                    self.coords().next().expect("non-empty")
                }
            }
            _ => self.coords().next().expect("non-empty"),
        }
    }

    fn coords(&self) -> Box<dyn Iterator<Item = Coord> + '_> {
        match self {
            Self::Point(c) => Box::new(std::iter::once(*c)),
            Self::MultiPoint(v) => Box::new(v.iter().copied()),
            Self::Polyline(l) => Box::new(l.coords().iter().copied()),
            Self::MultiPolyline(ls) => Box::new(ls.iter().flat_map(|l| l.coords().iter().copied())),
            Self::Polygon(p) => Box::new(p.exterior.iter().copied()),
            Self::MultiPolygon(ps) => Box::new(ps.iter().flat_map(|p| p.exterior.iter().copied())),
        }
    }

    pub(crate) fn parts(&self) -> Vec<planar::Part<'_>> {
        use planar::Part;
        match self {
            Self::Point(c) => vec![Part::Point(*c)],
            Self::MultiPoint(v) => v.iter().map(|c| Part::Point(*c)).collect(),
            Self::Polyline(l) => vec![Part::Line(l.coords())],
            Self::MultiPolyline(ls) => ls.iter().map(|l| Part::Line(l.coords())).collect(),
            Self::Polygon(p) => vec![Part::Area(p)],
            Self::MultiPolygon(ps) => ps.iter().map(Part::Area).collect(),
        }
    }
}

/// Axis-aligned bounds in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn from_coord(c: Coord) -> Self {
        Self {
            min_lon: c.lon,
            min_lat: c.lat,
            max_lon: c.lon,
            max_lat: c.lat,
        }
    }

    pub fn extend(&mut self, c: Coord) {
        self.min_lon = self.min_lon.min(c.lon);
        self.min_lat = self.min_lat.min(c.lat);
        self.max_lon = self.max_lon.max(c.lon);
        self.max_lat = self.max_lat.max(c.lat);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }

    pub fn contains_bbox(&self, other: &BBox) -> bool {
        self.min_lon <= other.min_lon
            && self.min_lat <= other.min_lat
            && self.max_lon >= other.max_lon
            && self.max_lat >= other.max_lat
    }

    pub fn center(&self) -> Coord {
        Coord {
            lon: (self.min_lon + self.max_lon) / 2.0,
            lat: (self.min_lat + self.max_lat) / 2.0,
        }
    }

    /// Grows the box by `eps` on every side. The longitude margin uses the
    /// smallest cosine over the grown latitude span, plus a small safety
    /// factor, so no point within `eps` of the box can fall outside it.
    pub fn expand_by_km(&self, eps_km: f64) -> BBox {
        if eps_km <= 0.0 {
            return *self;
        }
        let margin = eps_km * 1.01 + 1e-9;
        let dlat = (margin / EARTH_RADIUS_KM).to_degrees();
        let min_lat = (self.min_lat - dlat).max(-90.0);
        let max_lat = (self.max_lat + dlat).min(90.0);
        let cos = min_lat.abs().max(max_lat.abs()).to_radians().cos();
        let dlon = if cos < 1e-6 {
            360.0
        } else {
            (margin / (EARTH_RADIUS_KM * cos)).to_degrees()
        };
        BBox {
            min_lon: (self.min_lon - dlon).max(-180.0),
            min_lat,
            max_lon: (self.max_lon + dlon).min(180.0),
            max_lat,
        }
    }
}

/// Shortest distance between two geometries in kilometres; exactly 0 when
/// they intersect.
pub fn distance(a: &Geometry, b: &Geometry) -> Result<f64, GeometryError> {
    a.validate()?;
    b.validate()?;
    Ok(planar::distance_km(a, b))
}

/// True iff the two footprints share at least one point.
pub fn intersects(a: &Geometry, b: &Geometry) -> Result<bool, GeometryError> {
    a.validate()?;
    b.validate()?;
    Ok(planar::intersects(a, b))
}

/// True iff `target` lies within `eps_km` of `reference` (boundary inclusive).
pub fn within_buffer(target: &Geometry, reference: &Geometry, eps_km: f64) -> Result<bool, GeometryError> {
    if !(eps_km >= 0.0) {
        return Err(GeometryError::InvalidDistance(eps_km));
    }
    Ok(distance(target, reference)? <= eps_km)
}

/// True iff `target` lies entirely inside `region`, holes excluded.
pub fn contains(region: &Geometry, target: &Geometry) -> Result<bool, GeometryError> {
    region.validate()?;
    target.validate()?;
    let polys: Vec<&Polygon> = match region {
        Geometry::Polygon(p) => vec![p],
        Geometry::MultiPolygon(ps) => ps.iter().collect(),
        other => return Err(GeometryError::NotAreal(other.type_name())),
    };
    Ok(target
        .parts()
        .iter()
        .all(|part| polys.iter().any(|p| planar::polygon_contains_part(p, part))))
}

/// An approximate outline of the `eps_km` buffer around `reference`, for
/// display. Points become circles and polylines become one capsule per
/// segment; areal references have no outline.
pub fn buffer_outline(reference: &Geometry, eps_km: f64, arc_steps: usize) -> Option<Geometry> {
    if !(eps_km > 0.0) {
        return None;
    }
    let steps = arc_steps.max(4);
    let polys: Vec<Polygon> = match reference {
        Geometry::Point(c) => vec![planar::circle(*c, eps_km, steps * 2)?],
        Geometry::MultiPoint(cs) => cs
            .iter()
            .map(|c| planar::circle(*c, eps_km, steps * 2))
            .collect::<Option<_>>()?,
        Geometry::Polyline(l) => planar::capsules(l.coords(), eps_km, steps)?,
        Geometry::MultiPolyline(ls) => {
            let mut out = Vec::new();
            for l in ls {
                out.extend(planar::capsules(l.coords(), eps_km, steps)?);
            }
            out
        }
        Geometry::Polygon(_) | Geometry::MultiPolygon(_) => return None,
    };
    match polys.len() {
        0 => None,
        1 => polys.into_iter().next().map(Geometry::Polygon),
        _ => Some(Geometry::MultiPolygon(polys)),
    }
}
