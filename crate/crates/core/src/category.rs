use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Target object class, the selector over candidate objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Restaurant,
    Hotel,
    Attraction,
    Amenity,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown category {0:?}")]
pub struct UnknownCategory(pub String);

impl Category {
    pub const ALL: [Category; 4] = [Self::Restaurant, Self::Hotel, Self::Attraction, Self::Amenity];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Restaurant => "restaurant",
            Self::Hotel => "hotel",
            Self::Attraction => "attraction",
            Self::Amenity => "amenity",
        }
    }

    /// Single-letter type code used by the intent-extraction prompt.
    pub fn code(self) -> Option<char> {
        match self {
            Self::Restaurant => Some('R'),
            Self::Hotel => Some('H'),
            Self::Attraction => Some('A'),
            Self::Amenity => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Accepts canonical names, the R/H/A codes and a few common subtypes
    /// (`cafe` is a restaurant, `museum` an attraction).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase();
        let cat = match norm.as_str() {
            "r" | "restaurant" | "restaurants" | "food" | "cafe" | "café" | "coffee" | "diner" | "bar" | "bakery" => {
                Self::Restaurant
            }
            "h" | "hotel" | "hotels" | "lodging" | "accommodation" | "hostel" => Self::Hotel,
            "a" | "attraction" | "attractions" | "museum" | "park" | "gallery" | "theater" | "theatre" => {
                Self::Attraction
            }
            "amenity" | "amenities" => Self::Amenity,
            _ => return Err(UnknownCategory(s.to_string())),
        };
        Ok(cat)
    }
}
