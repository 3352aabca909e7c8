use super::{haversine_km, Coord, Geometry, Polygon, EARTH_RADIUS_KM};

/// A primitive component of a geometry.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Part<'a> {
    Point(Coord),
    Line(&'a [Coord]),
    Area(&'a Polygon),
}

/// Position of a point relative to an areal geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn in_span(p: Coord, a: Coord, b: Coord) -> bool {
    p.lon >= a.lon.min(b.lon) && p.lon <= a.lon.max(b.lon) && p.lat >= a.lat.min(b.lat) && p.lat <= a.lat.max(b.lat)
}

pub(crate) fn point_on_segment(p: Coord, a: Coord, b: Coord) -> bool {
    orient(a, b, p) == 0.0 && in_span(p, a, b)
}

/// Closed-segment intersection test.
pub(crate) fn segments_intersect(a: Coord, b: Coord, c: Coord, d: Coord) -> bool {
    let o1 = sign(orient(a, b, c));
    let o2 = sign(orient(a, b, d));
    let o3 = sign(orient(c, d, a));
    let o4 = sign(orient(c, d, b));
    // a zero orientation is only a touch if the point lies in the span
    (o1 == 0 && in_span(c, a, b))
        || (o2 == 0 && in_span(d, a, b))
        || (o3 == 0 && in_span(a, c, d))
        || (o4 == 0 && in_span(b, c, d))
        || (o1 * o2 < 0 && o3 * o4 < 0)
}

fn segments(line: &[Coord]) -> impl Iterator<Item = (Coord, Coord)> + '_ {
    line.windows(2).map(|w| (w[0], w[1]))
}

pub(crate) fn ring_self_intersects(ring: &[Coord]) -> bool {
    let n = ring.len() - 1; // closed ring: n edges
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a, b) = (ring[i], ring[i + 1]);
            let (c, d) = (ring[j], ring[j + 1]);
            if adjacent {
                // adjacent edges share one vertex; they may only overlap there
                let shared = if j == i + 1 { b } else { a };
                let (other_end_i, other_end_j) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(a, b, c) == 0.0
                    && orient(a, b, d) == 0.0
                    && (in_span(other_end_j, a, b) || in_span(other_end_i, c, d))
                    && other_end_i != shared
                {
                    return true;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn locate_in_ring(p: Coord, ring: &[Coord]) -> Location {
    let mut inside = false;
    for (a, b) in segments(ring) {
        if point_on_segment(p, a, b) {
            return Location::Boundary;
        }
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

pub(crate) fn locate_in_polygon(p: Coord, poly: &Polygon) -> Location {
    match locate_in_ring(p, poly.exterior()) {
        Location::Outside => return Location::Outside,
        Location::Boundary => return Location::Boundary,
        Location::Inside => {}
    }
    for hole in poly.holes() {
        match locate_in_ring(p, hole) {
            Location::Inside => return Location::Outside,
            Location::Boundary => return Location::Boundary,
            Location::Outside => {}
        }
    }
    Location::Inside
}

fn line_hits_polygon_edges(line: &[Coord], poly: &Polygon) -> bool {
    segments(line).any(|(a, b)| {
        poly.rings()
            .any(|ring| segments(ring).any(|(c, d)| segments_intersect(a, b, c, d)))
    })
}

fn polygon_edges_intersect(p: &Polygon, q: &Polygon) -> bool {
    p.rings().any(|ring| line_hits_polygon_edges(ring, q))
}

fn parts_intersect(p: &Part<'_>, q: &Part<'_>) -> bool {
    match (p, q) {
        (Part::Point(a), Part::Point(b)) => a == b,
        (Part::Point(c), Part::Line(l)) | (Part::Line(l), Part::Point(c)) => {
            segments(l).any(|(a, b)| point_on_segment(*c, a, b))
        }
        (Part::Point(c), Part::Area(poly)) | (Part::Area(poly), Part::Point(c)) => {
            locate_in_polygon(*c, poly) != Location::Outside
        }
        (Part::Line(l), Part::Line(m)) => {
            segments(l).any(|(a, b)| segments(m).any(|(c, d)| segments_intersect(a, b, c, d)))
        }
        (Part::Line(l), Part::Area(poly)) | (Part::Area(poly), Part::Line(l)) => {
            line_hits_polygon_edges(l, poly) || locate_in_polygon(l[0], poly) != Location::Outside
        }
        (Part::Area(p), Part::Area(q)) => {
            polygon_edges_intersect(p, q)
                || locate_in_polygon(p.exterior()[0], q) != Location::Outside
                || locate_in_polygon(q.exterior()[0], p) != Location::Outside
        }
    }
}

pub(crate) fn intersects(a: &Geometry, b: &Geometry) -> bool {
    let (pa, pb) = (a.parts(), b.parts());
    pa.iter().any(|p| pb.iter().any(|q| parts_intersect(p, q)))
}

/// Local equirectangular frame; x/y in kilometres.
struct Frame {
    lon0: f64,
    lat0: f64,
    cos0: f64,
}

impl Frame {
    fn around(coords: &[Coord]) -> Self {
        let (mut lo_lon, mut hi_lon, mut lo_lat, mut hi_lat) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for c in coords {
            lo_lon = lo_lon.min(c.lon);
            hi_lon = hi_lon.max(c.lon);
            lo_lat = lo_lat.min(c.lat);
            hi_lat = hi_lat.max(c.lat);
        }
        Self::centred((lo_lon + hi_lon) / 2.0, (lo_lat + hi_lat) / 2.0)
    }

    fn centred(lon0: f64, lat0: f64) -> Self {
        Self {
            lon0,
            lat0,
            cos0: lat0.to_radians().cos(),
        }
    }

    fn project(&self, c: Coord) -> (f64, f64) {
        (
            EARTH_RADIUS_KM * (c.lon - self.lon0).to_radians() * self.cos0,
            EARTH_RADIUS_KM * (c.lat - self.lat0).to_radians(),
        )
    }

    fn unproject(&self, x: f64, y: f64) -> Option<Coord> {
        if self.cos0 <= 1e-9 {
            return None;
        }
        let lon = self.lon0 + (x / (EARTH_RADIUS_KM * self.cos0)).to_degrees();
        let lat = self.lat0 + (y / EARTH_RADIUS_KM).to_degrees();
        Coord::new(lon, lat).ok()
    }
}

/// Point-to-segment distance in the frame centred on the three vertices.
pub(crate) fn point_segment_km(p: Coord, a: Coord, b: Coord) -> f64 {
    let frame = Frame::around(&[p, a, b]);
    let (px, py) = frame.project(p);
    let (ax, ay) = frame.project(a);
    let (bx, by) = frame.project(b);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (fx, fy) = (ax + t * dx, ay + t * dy);
    ((px - fx).powi(2) + (py - fy).powi(2)).sqrt()
}

fn segment_segment_km(a: Coord, b: Coord, c: Coord, d: Coord) -> f64 {
    point_segment_km(a, c, d)
        .min(point_segment_km(b, c, d))
        .min(point_segment_km(c, a, b))
        .min(point_segment_km(d, a, b))
}

fn point_line_km(p: Coord, line: &[Coord]) -> f64 {
    segments(line)
        .map(|(a, b)| point_segment_km(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

fn line_line_km(l: &[Coord], m: &[Coord]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, b) in segments(l) {
        for (c, d) in segments(m) {
            best = best.min(segment_segment_km(a, b, c, d));
        }
    }
    best
}

/// Distance between two parts that are known not to intersect.
fn parts_distance(p: &Part<'_>, q: &Part<'_>) -> f64 {
    match (p, q) {
        (Part::Point(a), Part::Point(b)) => haversine_km(*a, *b),
        (Part::Point(c), Part::Line(l)) | (Part::Line(l), Part::Point(c)) => point_line_km(*c, l),
        (Part::Point(c), Part::Area(poly)) | (Part::Area(poly), Part::Point(c)) => poly
            .rings()
            .map(|r| point_line_km(*c, r))
            .fold(f64::INFINITY, f64::min),
        (Part::Line(l), Part::Line(m)) => line_line_km(l, m),
        (Part::Line(l), Part::Area(poly)) | (Part::Area(poly), Part::Line(l)) => poly
            .rings()
            .map(|r| line_line_km(l, r))
            .fold(f64::INFINITY, f64::min),
        (Part::Area(p), Part::Area(q)) => {
            let mut best = f64::INFINITY;
            for r in p.rings() {
                for s in q.rings() {
                    best = best.min(line_line_km(r, s));
                }
            }
            best
        }
    }
}

pub(crate) fn distance_km(a: &Geometry, b: &Geometry) -> f64 {
    let (pa, pb) = (a.parts(), b.parts());
    let mut best = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            if parts_intersect(p, q) {
                return 0.0;
            }
            best = best.min(parts_distance(p, q));
        }
    }
    // disjoint footprints never report zero
    best.max(f64::MIN_POSITIVE)
}

/// Parameters in [0, 1] along `a→b` where it meets any ring edge of `poly`.
fn crossing_params(a: Coord, b: Coord, poly: &Polygon) -> Vec<f64> {
    let mut ts = vec![0.0, 1.0];
    let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
    let len2 = dx * dx + dy * dy;
    let param = |p: Coord| ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2;
    for ring in poly.rings() {
        for (c, d) in segments(ring) {
            if !segments_intersect(a, b, c, d) {
                continue;
            }
            let denom = dx * (d.lat - c.lat) - dy * (d.lon - c.lon);
            if denom != 0.0 {
                let t = ((c.lon - a.lon) * (d.lat - c.lat) - (c.lat - a.lat) * (d.lon - c.lon)) / denom;
                ts.push(t.clamp(0.0, 1.0));
            } else {
                // collinear overlap: both edge ends bound the shared stretch
                ts.push(param(c).clamp(0.0, 1.0));
                ts.push(param(d).clamp(0.0, 1.0));
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn segment_within(a: Coord, b: Coord, poly: &Polygon) -> bool {
    if locate_in_polygon(a, poly) == Location::Outside || locate_in_polygon(b, poly) == Location::Outside {
        return false;
    }
    let ts = crossing_params(a, b, poly);
    ts.windows(2).all(|w| {
        let t = (w[0] + w[1]) / 2.0;
        let mid = Coord {
            lon: a.lon + t * (b.lon - a.lon),
            lat: a.lat + t * (b.lat - a.lat),
        };
        locate_in_polygon(mid, poly) != Location::Outside
    })
}

fn line_within(line: &[Coord], poly: &Polygon) -> bool {
    segments(line).all(|(a, b)| segment_within(a, b, poly))
}

pub(crate) fn polygon_contains_part(poly: &Polygon, part: &Part<'_>) -> bool {
    match part {
        Part::Point(c) => locate_in_polygon(*c, poly) != Location::Outside,
        Part::Line(l) => line_within(l, poly),
        Part::Area(q) => {
            if !line_within(q.exterior(), poly) {
                return false;
            }
            // a hole of the container that sits inside the target breaks containment
            !poly.holes().iter().any(|hole| {
                hole.iter().any(|v| locate_in_polygon(*v, q) == Location::Inside)
                    || segments(hole).any(|(a, b)| {
                        let mid = Coord {
                            lon: (a.lon + b.lon) / 2.0,
                            lat: (a.lat + b.lat) / 2.0,
                        };
                        locate_in_polygon(mid, q) == Location::Inside
                    })
            })
        }
    }
}

pub(crate) fn circle(center: Coord, radius_km: f64, steps: usize) -> Option<Polygon> {
    let frame = Frame::centred(center.lon, center.lat);
    let mut ring = Vec::with_capacity(steps + 1);
    for i in 0..steps {
        let theta = std::f64::consts::TAU * i as f64 / steps as f64;
        ring.push(frame.unproject(radius_km * theta.cos(), radius_km * theta.sin())?);
    }
    ring.push(ring[0]);
    Polygon::new(ring, Vec::new()).ok()
}

/// One stadium-shaped polygon per segment of `line`.
pub(crate) fn capsules(line: &[Coord], radius_km: f64, arc_steps: usize) -> Option<Vec<Polygon>> {
    segments(line)
        .map(|(a, b)| {
            let frame = Frame::around(&[a, b]);
            let (ax, ay) = frame.project(a);
            let (bx, by) = frame.project(b);
            let heading = (by - ay).atan2(bx - ax);
            let half = std::f64::consts::FRAC_PI_2;
            let mut ring = Vec::with_capacity(2 * arc_steps + 3);
            // arc around b from heading-90° to heading+90°, then around a
            for (cx, cy, start) in [(bx, by, heading - half), (ax, ay, heading + half)] {
                for i in 0..=arc_steps {
                    let theta = start + std::f64::consts::PI * i as f64 / arc_steps as f64;
                    ring.push(frame.unproject(cx + radius_km * theta.cos(), cy + radius_km * theta.sin())?);
                }
            }
            ring.push(ring[0]);
            Polygon::new(ring, Vec::new()).ok()
        })
        .collect()
}
