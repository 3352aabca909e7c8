//! Word lists and sentence utilities behind the rule-based parser, the
//! default masking views and the trade-off heuristic.

use crate::category::Category;

/// Lowercased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits on `!`, `?`, `;`, newlines, and on `.` when it ends a word (so
/// decimals such as `1.5` stay intact). Returned sentences are trimmed and
/// non-empty, with their terminator kept.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        let end = match ch {
            '!' | '?' | ';' | '\n' => true,
            '.' => chars.peek().map_or(true, |&(_, next)| next.is_whitespace()),
            _ => false,
        };
        if end {
            let s = text[start..i + ch.len_utf8()].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + ch.len_utf8();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

pub const SPATIAL_CUES: &[&str] = &[
    "near", "along", "within", "in", "around", "close", "walk", "block", "radius", "exit", "route",
];

const CUE_SUFFIXES: &[&str] = &["", "s", "ing", "by", "er", "est", "r", "st"];

pub fn is_spatial_cue(token: &str) -> bool {
    SPATIAL_CUES.iter().any(|cue| {
        token
            .strip_prefix(cue)
            .is_some_and(|rest| CUE_SUFFIXES.contains(&rest))
    })
}

pub fn count_spatial_cues(text: &str) -> usize {
    tokenize(text).iter().filter(|t| is_spatial_cue(t)).count()
}

/// Preference and subject words that signal a non-spatial requirement.
pub const SEMANTIC_CUES: &[&str] = &[
    "affordable", "american", "atmosphere", "authentic", "best", "breakfast", "brunch", "budget",
    "burger", "casual", "cheap", "chef", "chinese", "clean", "coffee", "comfortable", "cozy",
    "cuisine", "delicious", "dinner", "dishes", "expensive", "family", "fancy", "food", "fresh",
    "friendly", "good", "great", "healthy", "indian", "italian", "kids", "local", "lunch", "luxury",
    "menu", "mexican", "nice", "outdoor", "pizza", "price", "priced", "prices", "quality", "quiet",
    "reasonable", "reasonably", "romantic", "seafood", "service", "spacious", "steak", "sushi",
    "tasty", "thai", "traditional", "vegan", "vegetarian", "view", "views",
];

pub fn count_semantic_cues(text: &str) -> usize {
    tokenize(text)
        .iter()
        .filter(|t| SEMANTIC_CUES.binary_search(&t.as_str()).is_ok())
        .count()
}

/// Route wording. `from … to` is matched as an ordered pair.
pub fn has_route_cue(text: &str) -> bool {
    let tokens = tokenize(text);
    let has = |w: &str| tokens.iter().any(|t| t == w);
    if ["route", "routes", "path", "between", "along"].iter().any(|w| has(w)) {
        return true;
    }
    tokens
        .iter()
        .position(|t| t == "from")
        .is_some_and(|i| tokens[i + 1..].iter().any(|t| t == "to"))
}

/// Sentences carrying a spatial cue go to the spatial side, the rest to
/// the semantic side; each side is re-joined with single spaces.
pub fn split_by_spatial_cue(text: &str) -> (String, String) {
    let mut spatial = Vec::new();
    let mut semantic = Vec::new();
    for s in sentences(text) {
        if tokenize(s).iter().any(|t| is_spatial_cue(t)) {
            spatial.push(s);
        } else {
            semantic.push(s);
        }
    }
    (spatial.join(" "), semantic.join(" "))
}

const RESTAURANT_WORDS: &[&str] = &[
    "bar", "breakfast", "brunch", "burger", "cafe", "café", "chef", "chinese", "coffee", "cuisine",
    "dine", "diner", "dining", "dinner", "dishes", "eat", "eating", "food", "fries", "italian",
    "lunch", "meal", "menu", "mexican", "pizza", "reservation", "restaurant", "restaurants",
    "sushi", "thai",
];
const HOTEL_WORDS: &[&str] = &["accommodation", "book", "hotel", "hotels", "room", "rooms", "stay"];
const ATTRACTION_WORDS: &[&str] = &[
    "explore", "gallery", "museum", "park", "performance", "see", "show", "sightseeing", "theater",
    "theatre", "tour", "visit",
];

/// Target class from keyword evidence. Dining words win over everything
/// else; a hotel mentioned only as a location ("near Hotel X") is ignored.
pub fn detect_category(text: &str) -> Option<Category> {
    let tokens = tokenize(text);
    let is = |t: &str, words: &[&str]| words.contains(&t) || t.strip_suffix('s').is_some_and(|t| words.contains(&t));
    let hit = |words: &[&str]| tokens.iter().any(|t| is(t, words));
    if hit(RESTAURANT_WORDS) {
        return Some(Category::Restaurant);
    }
    let hotel_wanted = tokens.iter().enumerate().any(|(i, t)| {
        is(t, HOTEL_WORDS) && !(i > 0 && matches!(tokens[i - 1].as_str(), "near" | "at" | "from" | "by"))
    });
    if hotel_wanted {
        return Some(Category::Hotel);
    }
    if hit(ATTRACTION_WORDS) {
        return Some(Category::Attraction);
    }
    None
}

/// The longest of `names` (already normalized) occurring as whole words in
/// `text`; equal lengths go to the smaller name.
pub fn longest_mention<'a>(text: &str, names: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let haystack = format!(" {} ", tokenize(text).join(" "));
    names
        .into_iter()
        .filter(|n| !n.is_empty() && haystack.contains(&format!(" {n} ")))
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
}

/// Lowercase, whitespace-collapsed form used for name matching.
pub fn normalize_name(name: &str) -> String {
    tokenize(name).join(" ")
}
