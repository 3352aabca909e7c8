//! Text renderings of answers, traces and reports.

use std::fmt::Write as _;

use georag_core::pipeline::{Answer, ParseStage, Trace};
use georag_core::{EvalReport, WeightPolicy};
use serde_json::json;

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, c) in cells.enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{c:<w$}", w = widths[i]);
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &mut headers.iter().copied());
    for r in rows {
        line(&mut out, &mut r.iter().map(String::as_str));
    }
    out
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn stage(s: &ParseStage) -> String {
    match s {
        ParseStage::Rule => "rule".into(),
        ParseStage::Llm => "llm".into(),
        ParseStage::RuleFallback(why) => format!("rule (llm parser failed: {why})"),
        ParseStage::Bypassed => "bypassed (dsl)".into(),
        ParseStage::ReferencedRegion => "referenced region".into(),
    }
}

pub fn eps(trace: &Trace) -> String {
    trace.eps_km.map_or("-".into(), |e| format!("{e} km"))
}

fn weights(trace: &Trace, policy: WeightPolicy) -> String {
    match trace.weights {
        Some(w) => format!("lambda_s={} lambda_k={} ({policy})", f4(w.lambda_s()), f4(w.lambda_k())),
        None => "-".into(),
    }
}

pub fn no_answer(trace: &Trace) -> String {
    match trace.stopped_at {
        Some(stage) => format!("no answer: nothing left after the {stage} stage"),
        None => "no answer".into(),
    }
}

fn answer_rows(answers: &[Answer]) -> Vec<Vec<String>> {
    answers
        .iter()
        .map(|a| {
            vec![
                a.rank.to_string(),
                a.poi_id.clone(),
                a.name.clone(),
                a.category.to_string(),
                f4(a.score),
                f4(a.f_s),
                f4(a.f_k),
                format!("{:.3}", a.distance_km),
                if a.on_frontier { "*".into() } else { String::new() },
            ]
        })
        .collect()
}

const ANSWER_HEADERS: [&str; 9] = ["rank", "id", "name", "category", "score", "f_s", "f_k", "dist_km", "frontier"];

pub fn answers_table(trace: &Trace, policy: WeightPolicy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "query: {}", trace.prepared.query.to_dsl());
    let _ = writeln!(out, "weights: {}", weights(trace, policy));
    if trace.answers.is_empty() {
        let _ = writeln!(out, "{}", no_answer(trace));
    } else {
        out.push_str(&table(&ANSWER_HEADERS, &answer_rows(&trace.answers)));
    }
    out
}

pub fn answers_json(trace: &Trace) -> String {
    let mut v = json!({
        "query": trace.prepared.query.to_dsl(),
        "kind": trace.kind,
        "eps_km": trace.eps_km,
        "parse": trace.prepared.stage,
        "weights": trace.weights,
        "answers": trace.answers,
    });
    if trace.answers.is_empty() {
        v["message"] = no_answer(trace).into();
    }
    pretty(&v)
}

pub fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn explain(trace: &Trace, policy: WeightPolicy) -> String {
    let p = &trace.prepared;
    let mut out = String::new();
    let _ = writeln!(out, "[parse] {}", stage(&p.stage));
    for r in &p.references {
        let _ = writeln!(out, "  reference: {r}");
    }
    let _ = writeln!(out, "  query: {}", p.query.to_dsl());
    let _ = writeln!(out, "  kind: {}  eps: {}", trace.kind, eps(trace));
    let category = p.query.target_category().map_or("any".into(), |c| c.to_string());
    let _ = writeln!(out, "  target: {category}");
    let _ = writeln!(out, "  spatial text: {:?}", p.intent.spatial_requirement);
    let _ = writeln!(out, "  semantic text: {:?}", p.intent.semantic_requirement);

    let _ = writeln!(out, "[retrieve] {} within the predicate", trace.retrieved);
    if trace.stopped_at == Some("retrieval") {
        let _ = writeln!(out, "stopped at retrieval: no candidates");
        return out;
    }
    let _ = writeln!(out, "[filter] {} of the target category", trace.candidates.len());
    if trace.stopped_at.is_some() {
        let _ = writeln!(out, "stopped at semantic filter: no candidates");
        return out;
    }

    let _ = writeln!(
        out,
        "[score] lambda_p={} lambda_d={}",
        f4(trace.fusion.lambda_p()),
        f4(trace.fusion.lambda_d())
    );
    let rows: Vec<Vec<String>> = trace
        .candidates
        .iter()
        .map(|c| {
            let s = &c.scores;
            vec![
                s.poi_id.clone(),
                format!("{:.3}", s.distance_km),
                f4(s.f_sparse),
                f4(s.f_dense_spatial),
                f4(c.f_s),
                f4(s.f_semantic),
            ]
        })
        .collect();
    out.push_str(&indent(&table(&["id", "dist_km", "f_sparse", "f_dense", "f_s", "f_k"], &rows)));

    let _ = writeln!(out, "[frontier] {}", trace.frontier.join(", "));
    let _ = writeln!(out, "[weights] {}", weights(trace, policy));
    if let Some(r) = &trace.rerank {
        let _ = writeln!(out, "[rerank] {r}");
    }
    let _ = writeln!(out, "[answers]");
    out.push_str(&indent(&table(&ANSWER_HEADERS, &answer_rows(&trace.answers))));
    out
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}\n")).collect()
}

pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "queries: {}  fingerprint: {}", report.query_count, &report.fingerprint[..16]);
    let ks: Vec<String> = report.ks.iter().map(|k| format!("@{k}")).collect();
    let mut headers = vec!["system", "metric"];
    headers.extend(ks.iter().map(String::as_str));
    let mut rows = Vec::new();
    for r in &report.systems {
        for (name, m) in [("precision", &r.precision), ("recall", &r.recall), ("f1", &r.f1), ("ndcg", &r.ndcg)] {
            let mut row = vec![r.system.to_string(), name.to_string()];
            row.extend(m.values().map(|v| f4(*v)));
            rows.push(row);
        }
    }
    out.push_str(&table(&headers, &rows));
    let failed: Vec<String> = report
        .systems
        .first()
        .map(|r| r.per_query.iter().filter(|q| q.error.is_some()).map(|q| q.index.to_string()).collect())
        .unwrap_or_default();
    if !failed.is_empty() {
        let _ = writeln!(out, "unparsed questions (scored as empty): {}", failed.join(", "));
    }
    out
}
