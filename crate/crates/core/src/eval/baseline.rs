use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::pipeline::Prepared;
use crate::retrieval::{retrieve_sparse_scaled, EmbeddingVector, Embedder, RetrievalError};

/// Reference rankers: sort by distance (SD), text embedding similarity
/// (TE), and the mean of the two scores (ST).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "SD")]
    Sd,
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "ST")]
    St,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Self::Sd, Self::Te, Self::St];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sd => "SD",
            Self::Te => "TE",
            Self::St => "ST",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SD" => Ok(Self::Sd),
            "TE" => Ok(Self::Te),
            "ST" => Ok(Self::St),
            _ => Err(format!("unknown baseline {s:?} (expected SD, TE or ST)")),
        }
    }
}

/// Embeddings of the full record descriptions, computed once per corpus.
pub struct BaselineRunner<'a> {
    corpus: &'a Corpus,
    embedder: &'a dyn Embedder,
    descriptions: Vec<EmbeddingVector>,
    distance_scale_km: f64,
}

fn by_score_desc(scored: &mut [(String, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

impl<'a> BaselineRunner<'a> {
    pub fn new(corpus: &'a Corpus, embedder: &'a dyn Embedder, distance_scale_km: f64) -> Result<Self, RetrievalError> {
        let texts: Vec<String> = corpus.records().iter().map(|r| r.description()).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let descriptions = embedder.embed_batch(&refs)?;
        Ok(Self {
            corpus,
            embedder,
            descriptions,
            distance_scale_km,
        })
    }

    /// Ranked ids, best first. SD and ST rank the spatial candidate set
    /// (category filter included); TE ranks the whole corpus.
    pub fn rank(&self, baseline: Baseline, prepared: &Prepared) -> Result<Vec<String>, RetrievalError> {
        match baseline {
            Baseline::Sd => Ok(retrieve_sparse_scaled(&prepared.query, self.corpus, self.distance_scale_km)?
                .into_iter()
                .map(|c| c.poi_id)
                .collect()),
            Baseline::Te => {
                let q = self.embedder.embed(&prepared.text)?;
                let mut scored = self
                    .corpus
                    .records()
                    .iter()
                    .zip(&self.descriptions)
                    .map(|(r, v)| Ok((r.id.clone(), q.cosine(v)?)))
                    .collect::<Result<Vec<_>, RetrievalError>>()?;
                by_score_desc(&mut scored);
                Ok(scored.into_iter().map(|(id, _)| id).collect())
            }
            Baseline::St => {
                let q = self.embedder.embed(&prepared.text)?;
                let mut scored = retrieve_sparse_scaled(&prepared.query, self.corpus, self.distance_scale_km)?
                    .into_iter()
                    .map(|c| {
                        let cos = q.cosine(&self.descriptions[c.slot])?;
                        Ok((c.poi_id, (c.f_sparse + cos) / 2.0))
                    })
                    .collect::<Result<Vec<_>, RetrievalError>>()?;
                by_score_desc(&mut scored);
                Ok(scored.into_iter().map(|(id, _)| id).collect())
            }
        }
    }
}
