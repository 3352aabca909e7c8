//! Generated benchmark city with planted answers.
//!
//! The city is a grid of neighborhoods laid on a street grid. Each
//! neighborhood carries one question whose single relevant POI is the only
//! restaurant that both satisfies the spatial predicate and serves the
//! dish the question asks for. Around it sit restaurants that satisfy the
//! predicate but serve other dishes, a hotel serving the dish, and
//! restaurants serving the dish outside the predicate.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::category::Category;
use crate::corpus::{Gazetteer, GazetteerEntry, PoiInput, QaPair};
use crate::geometry::{haversine_km, Coord, Geometry, Polygon};

/// Degrees between parallel streets.
const STREET: f64 = 0.001;
const ORIGIN: (f64, f64) = (-73.99, 40.60);
const SPACING_LON: f64 = 0.04;
const SPACING_LAT: f64 = 0.03;
const GRID_COLUMNS: usize = 10;
/// Route endpoints sit this many streets either side of the center.
const ROUTE_HALF: i32 = 4;
const WARD_HALF: f64 = 0.005;
const IN_PREDICATE: usize = 5;
const OUTSIDE_WITH_DISH: usize = 2;

pub const DEFAULT_NEIGHBORHOODS: usize = 100;
/// POIs per neighborhood: two landmarks, the planted answer, four other
/// restaurants inside the predicate, a hotel, two restaurants outside.
pub const POIS_PER_NEIGHBORHOOD: usize = 2 + IN_PREDICATE + 1 + OUTSIDE_WITH_DISH;

/// Two words each, no word shared between dishes.
const DISHES: &[&str] = &[
    "saffron dumplings", "smoked brisket", "lavender gelato", "miso ramen", "duck confit",
    "lobster rolls", "paneer tikka", "beef pho", "clam chowder", "pork buns", "lamb tagine",
    "crab cakes", "kimchi pancakes", "fish tacos", "mushroom risotto", "goat curry",
    "oyster platters", "chickpea falafel", "potato pierogi", "shrimp ceviche", "bulgogi bibimbap",
    "paprika goulash", "chorizo empanadas", "prawn tempura", "tomato shakshuka", "valencia paella",
    "fennel sausages", "walnut baklava",
];

const LANDMARK_FIRST: &[&str] = &[
    "Amber", "Birch", "Cedar", "Cobalt", "Copper", "Crimson", "Elm", "Garnet", "Hazel", "Indigo",
    "Ivory", "Juniper", "Laurel", "Maple", "Onyx", "Opal", "Quartz", "Rowan", "Sable", "Willow",
];
const LANDMARK_SECOND: &[&str] = &[
    "Fountain", "Tower", "Gate", "Plaza", "Arch", "Monument", "Statue", "Clock", "Obelisk", "Bell",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Point,
    Route,
    Ward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCity {
    pub pois: Vec<PoiInput>,
    pub gazetteer: Gazetteer,
    pub qa: Vec<QaPair>,
}

fn coord(center: Coord, bx: i32, by: i32) -> Coord {
    Coord::new(center.lon() + bx as f64 * STREET, center.lat() + by as f64 * STREET).expect("inside the city")
}

fn landmark_name(i: usize, second: usize) -> String {
    let n = LANDMARK_FIRST.len();
    format!(
        "{} {}",
        LANDMARK_FIRST[i % n],
        LANDMARK_SECOND[(i / n * 2 + second) % LANDMARK_SECOND.len()]
    )
}

/// Distinct intersections drawn from `candidates` until `n` satisfy `keep`.
fn pick(
    rng: &mut ChaCha8Rng,
    taken: &mut BTreeSet<(i32, i32)>,
    n: usize,
    range: (i32, i32),
    keep: impl Fn(i32, i32) -> bool,
) -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = (rng.gen_range(range.0..=range.1), rng.gen_range(range.0..=range.1));
        if keep(p.0, p.1) && taken.insert(p) {
            out.push(p);
        }
    }
    out
}

/// `neighborhoods` questions over `neighborhoods * POIS_PER_NEIGHBORHOOD`
/// POIs. The same seed gives the same city.
pub fn synth_city(seed: u64, neighborhoods: usize) -> SynthCity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pois = Vec::with_capacity(neighborhoods * POIS_PER_NEIGHBORHOOD);
    let mut wards = Vec::new();
    let mut qa = Vec::with_capacity(neighborhoods);

    for i in 0..neighborhoods {
        let center = Coord::new(
            ORIGIN.0 + (i % GRID_COLUMNS) as f64 * SPACING_LON,
            ORIGIN.1 + (i / GRID_COLUMNS) as f64 * SPACING_LAT,
        )
        .expect("inside the city");
        let shape = match i % 10 {
            7 | 8 => Shape::Route,
            9 => Shape::Ward,
            _ => Shape::Point,
        };
        let a_name = landmark_name(i, 0);
        let b_name = landmark_name(i, 1);
        let (a_at, b_at) = match shape {
            Shape::Route => ((-ROUTE_HALF, 0), (ROUTE_HALF, 0)),
            _ => ((0, 0), (ROUTE_HALF, -ROUTE_HALF)),
        };
        let mut taken: BTreeSet<(i32, i32)> = [a_at, b_at].into_iter().collect();

        let dish = DISHES[rng.gen_range(0..DISHES.len())];
        let mut others: Vec<&str> = DISHES.iter().copied().filter(|d| *d != dish).collect();
        others.shuffle(&mut rng);

        // radius in meters, or None for the "near" wording (1 km)
        let radius_m: Option<u32> = [Some(400), Some(500), Some(800), None][rng.gen_range(0..4)];
        let radius_km = radius_m.map_or(1.0, |m| m as f64 / 1000.0);
        let dist = |bx: i32, by: i32| haversine_km(center, coord(center, bx, by));
        let (inside, outside): (Vec<(i32, i32)>, Vec<(i32, i32)>) = match shape {
            Shape::Point => {
                let reach = ((1.3 * radius_km + 0.6) / 0.08).ceil() as i32;
                let inside = pick(&mut rng, &mut taken, IN_PREDICATE + 1, (-reach, reach), |x, y| {
                    let d = dist(x, y);
                    d >= 0.1 * radius_km && d <= 0.8 * radius_km
                });
                let outside = pick(&mut rng, &mut taken, OUTSIDE_WITH_DISH, (-reach, reach), |x, y| {
                    let d = dist(x, y);
                    d >= 1.3 * radius_km && d <= 1.3 * radius_km + 0.6
                });
                (inside, outside)
            }
            Shape::Route => {
                let inside = pick(&mut rng, &mut taken, IN_PREDICATE + 1, (-ROUTE_HALF, ROUTE_HALF), |_, y| y.abs() <= 1);
                let outside = pick(&mut rng, &mut taken, OUTSIDE_WITH_DISH, (-8, 8), |_, y| y.abs() >= 4);
                (inside, outside)
            }
            Shape::Ward => {
                let inside = pick(&mut rng, &mut taken, IN_PREDICATE + 1, (-3, 3), |_, _| true);
                let outside = pick(&mut rng, &mut taken, OUTSIDE_WITH_DISH, (-14, 14), |x, y| x.abs().max(y.abs()) >= 8);
                (inside, outside)
            }
        };

        let id = |role: &str, j: usize| format!("n{i:03}-{role}{j}");
        let mut push = |id: String, name: String, category: Category, at: (i32, i32), reviews: Vec<String>| {
            pois.push(PoiInput {
                id,
                name,
                category,
                geometry: Geometry::Point(coord(center, at.0, at.1)),
                reviews,
            });
        };
        push(id("a", 0), a_name.clone(), Category::Attraction, a_at, vec![format!("The {a_name} is a landmark.")]);
        push(id("a", 1), b_name.clone(), Category::Attraction, b_at, vec![format!("The {b_name} is a landmark.")]);
        let close_by = format!("Just around the corner from {a_name}.");
        let serves = |d: &str| format!("Serves {d} daily.");

        // the last inside spot goes to the hotel, the planted answer takes
        // a random one of the rest
        let hotel_at = inside[IN_PREDICATE];
        let inside = &inside[..IN_PREDICATE];
        let planted_at = rng.gen_range(0..IN_PREDICATE);
        let mut planted_id = String::new();
        for (j, at) in inside.iter().enumerate() {
            let rid = id("r", j);
            let menu = if j == planted_at {
                planted_id = rid.clone();
                serves(dish)
            } else {
                serves(others[j])
            };
            push(rid, format!("Eatery {i}-{j}"), Category::Restaurant, *at, vec![close_by.clone(), menu]);
        }
        push(id("h", 0), format!("Lodge {i}"), Category::Hotel, hotel_at, vec![close_by.clone(), serves(dish)]);
        for (j, at) in outside.iter().enumerate() {
            push(
                id("x", j),
                format!("Bistro {i}-{j}"),
                Category::Restaurant,
                *at,
                vec![format!("Worth the trip from {a_name}."), serves(dish)],
            );
        }

        let craving = format!("I am craving good fresh {dish}.");
        let (question, reference_spec) = match shape {
            Shape::Point => {
                let first = match radius_m {
                    Some(m) => format!("I am at {a_name} and want a restaurant within {m} m."),
                    None => format!("Is there a restaurant near {a_name}?"),
                };
                (format!("{first} {craving}"), vec![a_name.clone()])
            }
            Shape::Route => (
                format!(
                    "I will walk from {a_name} to {b_name}. Any restaurant along the way, within 200 m of the route? {craving}"
                ),
                vec![a_name.clone(), b_name.clone()],
            ),
            Shape::Ward => {
                let ward = format!("{} Ward", LANDMARK_FIRST[(i / 10) % LANDMARK_FIRST.len()]);
                let ring = Polygon::rect(
                    center.lon() - WARD_HALF,
                    center.lat() - WARD_HALF,
                    center.lon() + WARD_HALF,
                    center.lat() + WARD_HALF,
                )
                .expect("valid square");
                wards.push(GazetteerEntry {
                    name: ward.clone(),
                    aliases: vec![],
                    polygon: Geometry::Polygon(ring),
                });
                (format!("Any restaurant in {ward}? {craving}"), vec![])
            }
        };
        qa.push(QaPair {
            question,
            reference_spec,
            relevant_ids: [planted_id].into_iter().collect(),
        });
    }

    SynthCity {
        pois,
        gazetteer: Gazetteer::new(wards).expect("distinct ward names"),
        qa,
    }
}
