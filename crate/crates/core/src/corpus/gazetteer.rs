use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Geometry;
use crate::lexicon::{longest_mention, normalize_name};

/// A named region. Names and aliases are stored normalized (lowercase,
/// single spaces).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub polygon: Geometry,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GazetteerError {
    #[error("region {0:?} is not a polygon")]
    NotAreal(String),
    #[error("name {name:?} is claimed by both {first:?} and {second:?}")]
    AmbiguousName { name: String, first: String, second: String },
    #[error("region name is empty")]
    EmptyName,
}

/// Region name → polygon lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_name: BTreeMap<String, usize>,
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Result<Self, GazetteerError> {
        let mut normalized = Vec::with_capacity(entries.len());
        let mut by_name = BTreeMap::new();
        for (i, mut e) in entries.into_iter().enumerate() {
            if !e.polygon.is_areal() {
                return Err(GazetteerError::NotAreal(e.name));
            }
            e.name = normalize_name(&e.name);
            if e.name.is_empty() {
                return Err(GazetteerError::EmptyName);
            }
            let mut aliases: Vec<String> = e
                .aliases
                .iter()
                .map(|a| normalize_name(a))
                .filter(|a| !a.is_empty() && *a != e.name)
                .collect();
            aliases.sort();
            aliases.dedup();
            e.aliases = aliases;
            for key in std::iter::once(&e.name).chain(&e.aliases) {
                if let Some(&prev) = by_name.get(key) {
                    let first: &GazetteerEntry = &normalized[prev];
                    return Err(GazetteerError::AmbiguousName {
                        name: key.clone(),
                        first: first.name.clone(),
                        second: e.name.clone(),
                    });
                }
                by_name.insert(key.clone(), i);
            }
            normalized.push(e);
        }
        Ok(Self {
            entries: normalized,
            by_name,
        })
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&GazetteerEntry> {
        self.by_name.get(&normalize_name(name)).map(|&i| &self.entries[i])
    }

    /// The region whose name or alias appears as whole words in `text`.
    /// The longest matching name wins; equal lengths fall back to name order.
    pub fn find_mention(&self, text: &str) -> Option<&GazetteerEntry> {
        let key = longest_mention(text, self.by_name.keys().map(String::as_str))?;
        Some(&self.entries[self.by_name[key]])
    }

    /// All canonical names, for prompt construction.
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;

    fn entry(name: &str, aliases: &[&str]) -> GazetteerEntry {
        GazetteerEntry {
            name: name.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            polygon: Geometry::Polygon(Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()),
        }
    }

    #[test]
    fn mentions_prefer_longest_name() {
        let g = Gazetteer::new(vec![
            entry("Manhattan", &["NYC Manhattan"]),
            entry("Lower Manhattan", &[]),
        ])
        .unwrap();
        assert_eq!(g.find_mention("dinner in lower Manhattan?").unwrap().name, "lower manhattan");
        assert_eq!(g.find_mention("good restaurant in MANHATTAN").unwrap().name, "manhattan");
        assert!(g.find_mention("manhattans").is_none());
        assert_eq!(g.get("nyc  manhattan").unwrap().name, "manhattan");
    }

    #[test]
    fn aliases_must_be_unique() {
        let err = Gazetteer::new(vec![entry("a", &["midtown"]), entry("midtown", &[])]).unwrap_err();
        assert!(matches!(err, GazetteerError::AmbiguousName { .. }));
    }
}
