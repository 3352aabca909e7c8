//! Ranking metrics over QA pairs, for the engine and the baselines.

mod baseline;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use baseline::{Baseline, BaselineRunner};

use crate::corpus::QaPair;
use crate::pipeline::{Engine, PipelineError, QueryInput};
use crate::retrieval::RetrievalError;

pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no QA pairs to evaluate")]
    Empty,
    #[error("k values must be at least 1 and at least one is needed")]
    BadK,
    #[error("no systems to evaluate")]
    NoSystems,
    #[error("QA pair {index}: {source}")]
    Pair { index: usize, source: PipelineError },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

fn hits(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> usize {
    ranked.iter().take(k).filter(|id| relevant.contains(*id)).count()
}

/// Relevant share of the top `k`, over `min(k, returned)`; 0 for an empty
/// ranking.
pub fn precision_at_k(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let denom = k.min(ranked.len());
    if denom == 0 {
        return 0.0;
    }
    hits(ranked, relevant, k) as f64 / denom as f64
}

pub fn recall_at_k(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits(ranked, relevant, k) as f64 / relevant.len() as f64
}

pub fn f1_at_k(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let p = precision_at_k(ranked, relevant, k);
    let r = recall_at_k(ranked, relevant, k);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Binary-gain NDCG with `1/log2(i + 1)` discounts, `i` counted from 1.
pub fn ndcg_at_k(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    // folded from +0.0: an empty f64 `sum` is -0.0 and would print as such
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| relevant.contains(*id))
        .map(|(i, _)| discount(i))
        .fold(0.0, |a, b| a + b);
    let idcg: f64 = (0..k.min(relevant.len())).map(discount).fold(0.0, |a, b| a + b);
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// A ranker under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "engine")]
    Engine,
    #[serde(untagged)]
    Baseline(Baseline),
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Engine => f.write_str("engine"),
            Self::Baseline(b) => b.fmt(f),
        }
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("engine") {
            Ok(Self::Engine)
        } else {
            s.parse().map(Self::Baseline)
        }
    }
}

pub type PerK = BTreeMap<usize, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub index: usize,
    pub question: String,
    pub ranked: Vec<String>,
    /// Why the system returned nothing, when it could not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub precision: PerK,
    pub recall: PerK,
    pub f1: PerK,
    pub ndcg: PerK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub system: System,
    pub precision: PerK,
    pub recall: PerK,
    pub f1: PerK,
    pub ndcg: PerK,
    pub per_query: Vec<QueryMetrics>,
}

impl MetricReport {
    fn from_queries(system: System, ks: &[usize], per_query: Vec<QueryMetrics>) -> Self {
        let n = per_query.len() as f64;
        let mean = |get: fn(&QueryMetrics) -> &PerK| -> PerK {
            ks.iter()
                .map(|k| (*k, per_query.iter().map(|q| get(q)[k]).fold(0.0, |a, b| a + b) / n))
                .collect()
        };
        Self {
            system,
            precision: mean(|q| &q.precision),
            recall: mean(|q| &q.recall),
            f1: mean(|q| &q.f1),
            ndcg: mean(|q| &q.ndcg),
            per_query,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub fingerprint: String,
    pub ks: Vec<usize>,
    pub query_count: usize,
    pub systems: Vec<MetricReport>,
}

impl EvalReport {
    pub fn system(&self, s: System) -> Option<&MetricReport> {
        self.systems.iter().find(|r| r.system == s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `system,metric,k,value` rows of the averaged metrics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,metric,k,value\n");
        for r in &self.systems {
            for (name, m) in [("precision", &r.precision), ("recall", &r.recall), ("f1", &r.f1), ("ndcg", &r.ndcg)] {
                for (k, v) in m {
                    out.push_str(&format!("{},{name},{k},{v}\n", r.system));
                }
            }
        }
        out
    }
}

fn metrics(index: usize, question: &str, ranked: Vec<String>, relevant: &BTreeSet<String>, ks: &[usize]) -> QueryMetrics {
    let per = |f: fn(&[String], &BTreeSet<String>, usize) -> f64| -> PerK {
        ks.iter().map(|&k| (k, f(&ranked, relevant, k))).collect()
    };
    QueryMetrics {
        index,
        question: question.to_string(),
        precision: per(precision_at_k),
        recall: per(recall_at_k),
        f1: per(f1_at_k),
        ndcg: per(ndcg_at_k),
        ranked,
        error: None,
    }
}

/// Evaluates `systems` on `pairs`, macro-averaging over pairs. A pair whose
/// question cannot be turned into a spatial query counts as an empty
/// ranking for every system; unresolvable references are errors.
pub fn evaluate(engine: &Engine, pairs: &[QaPair], ks: &[usize], systems: &[System]) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::BadK);
    }
    if systems.is_empty() {
        return Err(EvalError::NoSystems);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut systems = systems.to_vec();
    systems.dedup();
    let depth = *ks.last().expect("non-empty");
    let runner = if systems.iter().any(|s| matches!(s, System::Baseline(_))) {
        Some(BaselineRunner::new(engine.corpus, engine.embedder, engine.config.distance_scale_km)?)
    } else {
        None
    };

    let mut per_system: Vec<Vec<QueryMetrics>> = vec![Vec::new(); systems.len()];
    for (index, pair) in pairs.iter().enumerate() {
        let input = QueryInput::Question {
            text: &pair.question,
            references: &pair.reference_spec,
        };
        let prepared = match engine.prepare(&input) {
            Ok(p) => Ok(p),
            Err(PipelineError::Query(e @ crate::query::QueryError::NotFound(_))) => {
                return Err(EvalError::Pair {
                    index,
                    source: e.into(),
                })
            }
            Err(PipelineError::Query(e)) => Err(e.to_string()),
            Err(e) => return Err(EvalError::Pair { index, source: e }),
        };
        for (slot, system) in systems.iter().enumerate() {
            let ranked = match &prepared {
                Err(why) => Err(why.clone()),
                Ok(p) => Ok(match system {
                    System::Engine => engine
                        .run_prepared(p.clone(), depth)
                        .map_err(|source| EvalError::Pair { index, source })?
                        .answers
                        .into_iter()
                        .map(|a| a.poi_id)
                        .collect(),
                    System::Baseline(b) => {
                        let mut ids = runner.as_ref().expect("built for baselines").rank(*b, p)?;
                        ids.truncate(depth);
                        ids
                    }
                }),
            };
            let m = match ranked {
                Ok(ids) => metrics(index, &pair.question, ids, &pair.relevant_ids, &ks),
                Err(why) => QueryMetrics {
                    error: Some(why),
                    ..metrics(index, &pair.question, Vec::new(), &pair.relevant_ids, &ks)
                },
            };
            per_system[slot].push(m);
        }
    }

    let fingerprint = fingerprint(engine, pairs, &ks, &systems);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fingerprint,
        ks: ks.clone(),
        query_count: pairs.len(),
        systems: systems
            .iter()
            .zip(per_system)
            .map(|(s, q)| MetricReport::from_queries(*s, &ks, q))
            .collect(),
    })
}

/// Hash of everything the report depends on.
pub fn fingerprint(engine: &Engine, pairs: &[QaPair], ks: &[usize], systems: &[System]) -> String {
    let head = serde_json::json!({
        "config": engine.config,
        "embedder": engine.embedder.id(),
        "masker": engine.masker.id(),
        "gateway": engine.gateway.map(|g| g.backend_id()),
        "corpus": engine.corpus.fingerprint(),
        "ks": ks,
        "systems": systems,
        "qa": pairs,
    });
    hex::encode(Sha256::digest(head.to_string().as_bytes()))
}
