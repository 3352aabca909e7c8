//! Packed R-tree over object bounding boxes.
//!
//! Entries are sorted along a Hilbert curve through their box centres and
//! packed bottom-up into nodes of `leaf_capacity` children. The tree only
//! prunes; every query finishes with the exact geometry predicate, so
//! results equal a linear scan.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::category::Category;
use crate::geometry::{self, BBox, Geometry, GeometryError};

pub const DEFAULT_LEAF_CAPACITY: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub id: String,
    pub geometry: Geometry,
    pub category: Option<Category>,
}

impl IndexEntry {
    pub fn new(id: impl Into<String>, geometry: Geometry) -> Self {
        Self {
            id: id.into(),
            geometry,
            category: None,
        }
    }

    pub fn with_category(mut self, category: Category) -> Self {
        self.category = Some(category);
        self
    }
}

/// A matching entry, identified by its position in the build order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub slot: usize,
    pub distance_km: f64,
}

#[derive(Debug, Clone)]
enum Children {
    Leaf(Vec<usize>),
    Inner(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Node {
    bbox: BBox,
    children: Children,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    entries: Vec<IndexEntry>,
    boxes: Vec<BBox>,
    nodes: Vec<Node>,
    root: Option<usize>,
    leaf_capacity: usize,
}

impl SpatialIndex {
    pub fn build(entries: Vec<IndexEntry>) -> Result<Self, IndexError> {
        Self::build_with_capacity(entries, DEFAULT_LEAF_CAPACITY)
    }

    pub fn build_with_capacity(entries: Vec<IndexEntry>, leaf_capacity: usize) -> Result<Self, IndexError> {
        let leaf_capacity = leaf_capacity.max(2);
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            e.geometry.validate()?;
            if !seen.insert(e.id.as_str()) {
                return Err(IndexError::DuplicateId(e.id.clone()));
            }
        }
        let boxes: Vec<BBox> = entries.iter().map(|e| e.geometry.bbox()).collect();
        let mut index = Self {
            entries,
            boxes,
            nodes: Vec::new(),
            root: None,
            leaf_capacity,
        };
        index.pack();
        Ok(index)
    }

    fn pack(&mut self) {
        if self.entries.is_empty() {
            return;
        }
        let extent = self.boxes.iter().skip(1).fold(self.boxes[0], |acc, b| acc.union(b));
        let mut order: Vec<(u64, usize)> = self
            .boxes
            .iter()
            .enumerate()
            .map(|(slot, b)| (hilbert_key(&extent, b), slot))
            .collect();
        // ties resolved by id so the packing never depends on input order
        order.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| self.entries[a.1].id.cmp(&self.entries[b.1].id)));

        let mut level: Vec<usize> = order
            .chunks(self.leaf_capacity)
            .map(|chunk| {
                let slots: Vec<usize> = chunk.iter().map(|&(_, s)| s).collect();
                let bbox = union_all(slots.iter().map(|&s| &self.boxes[s]));
                self.push_node(bbox, Children::Leaf(slots))
            })
            .collect();
        while level.len() > 1 {
            level = level
                .chunks(self.leaf_capacity)
                .map(|chunk| {
                    let bbox = union_all(chunk.iter().map(|&n| &self.nodes[n].bbox));
                    self.push_node(bbox, Children::Inner(chunk.to_vec()))
                })
                .collect();
        }
        self.root = level.first().copied();
    }

    fn push_node(&mut self, bbox: BBox, children: Children) -> usize {
        self.nodes.push(Node { bbox, children });
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn entry(&self, slot: usize) -> &IndexEntry {
        &self.entries[slot]
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Slots whose bounding box meets `window`, in ascending slot order.
    pub fn slots_in_bbox(&self, window: &BBox) -> Vec<usize> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bbox.intersects(window) {
                continue;
            }
            match &node.children {
                Children::Leaf(slots) => {
                    out.extend(slots.iter().copied().filter(|&s| self.boxes[s].intersects(window)));
                }
                Children::Inner(kids) => stack.extend(kids.iter().copied()),
            }
        }
        out.sort_unstable();
        out
    }

    fn category_matches(&self, slot: usize, category: Option<Category>) -> bool {
        category.is_none() || self.entries[slot].category == category
    }

    /// Entries within `eps_km` of `reference` (distance zero when they
    /// intersect), with their distances.
    pub fn hits_within_distance(
        &self,
        reference: &Geometry,
        eps_km: f64,
        category: Option<Category>,
    ) -> Result<Vec<Hit>, IndexError> {
        if !(eps_km >= 0.0) {
            return Err(GeometryError::InvalidDistance(eps_km).into());
        }
        reference.validate()?;
        let window = reference.bbox().expand_by_km(eps_km);
        let mut hits = Vec::new();
        for slot in self.slots_in_bbox(&window) {
            if !self.category_matches(slot, category) {
                continue;
            }
            let d = geometry::distance(&self.entries[slot].geometry, reference)?;
            if d <= eps_km {
                hits.push(Hit { slot, distance_km: d });
            }
        }
        Ok(hits)
    }

    pub fn query_within_distance(
        &self,
        reference: &Geometry,
        eps_km: f64,
        category: Option<Category>,
    ) -> Result<BTreeSet<String>, IndexError> {
        Ok(self
            .hits_within_distance(reference, eps_km, category)?
            .into_iter()
            .map(|h| self.entries[h.slot].id.clone())
            .collect())
    }

    /// Entries lying entirely inside `region`.
    pub fn slots_contained(&self, region: &Geometry, category: Option<Category>) -> Result<Vec<usize>, IndexError> {
        if !region.is_areal() {
            return Err(GeometryError::NotAreal(region.type_name()).into());
        }
        region.validate()?;
        let window = region.bbox();
        let mut out = Vec::new();
        for slot in self.slots_in_bbox(&window) {
            if self.category_matches(slot, category) && geometry::contains(region, &self.entries[slot].geometry)? {
                out.push(slot);
            }
        }
        Ok(out)
    }

    pub fn query_contained(
        &self,
        region: &Geometry,
        category: Option<Category>,
    ) -> Result<BTreeSet<String>, IndexError> {
        Ok(self
            .slots_contained(region, category)?
            .into_iter()
            .map(|s| self.entries[s].id.clone())
            .collect())
    }

    #[cfg(test)]
    fn leaves(&self) -> Vec<(BBox, Vec<usize>)> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.children {
                Children::Leaf(s) => Some((n.bbox, s.clone())),
                Children::Inner(_) => None,
            })
            .collect()
    }
}

fn union_all<'a>(mut boxes: impl Iterator<Item = &'a BBox>) -> BBox {
    let first = *boxes.next().expect("node has children");
    boxes.fold(first, |acc, b| acc.union(b))
}

const HILBERT_ORDER: u32 = 16;

fn hilbert_key(extent: &BBox, b: &BBox) -> u64 {
    let side = (1u64 << HILBERT_ORDER) - 1;
    let c = b.center();
    let scale = |v: f64, lo: f64, hi: f64| -> u64 {
        if hi > lo {
            (((v - lo) / (hi - lo)) * side as f64).round().clamp(0.0, side as f64) as u64
        } else {
            0
        }
    };
    let x = scale(c.lon(), extent.min_lon, extent.max_lon);
    let y = scale(c.lat(), extent.min_lat, extent.max_lat);
    hilbert_d(x, y)
}

/// Distance along the Hilbert curve of order `HILBERT_ORDER`.
fn hilbert_d(mut x: u64, mut y: u64) -> u64 {
    let n = 1u64 << HILBERT_ORDER;
    let mut d = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}
