use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::{Corpus, CorpusError};

/// A benchmark question. `reference_spec` lists the places the question is
/// anchored on, each a POI name, a region name or a `lon, lat` literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    #[serde(default, deserialize_with = "one_or_many")]
    pub reference_spec: Vec<String>,
    pub relevant_ids: BTreeSet<String>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Spec {
        One(String),
        Many(Vec<String>),
    }
    Ok(match Spec::deserialize(d)? {
        Spec::One(s) => vec![s],
        Spec::Many(v) => v,
    })
}

/// Reads JSON lines, skipping blank lines and `#` comments. Every pair
/// needs at least one relevant id, and all of them must exist in `corpus`.
pub fn read_qa_pairs(path: &Path, corpus: &Corpus) -> Result<Vec<QaPair>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = format!("{}:{}", path.display(), n + 1);
        let qa: QaPair = serde_json::from_str(line).map_err(|e| CorpusError::record(&loc, e))?;
        if qa.relevant_ids.is_empty() {
            return Err(CorpusError::record(&loc, "relevant_ids is empty"));
        }
        if let Some(missing) = qa.relevant_ids.iter().find(|id| corpus.get(id).is_none()) {
            return Err(CorpusError::record(&loc, format!("relevant id {missing:?} is not in the corpus")));
        }
        out.push(qa);
    }
    Ok(out)
}
