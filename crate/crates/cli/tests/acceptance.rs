//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::collections::{BTreeSet, HashSet};
use std::ffi::OsString;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use georag_core::corpus::{self, read_gazetteer, read_pois};
use georag_core::eval::{ndcg_at_k, BaselineRunner, DEFAULT_KS};
use georag_core::geometry::{contains, distance, intersects};
use georag_core::llm::{parse_with_llm, OfflineChat};
use georag_core::pipeline::ScoredCandidate;
use georag_core::query::{estimate_epsilon, parse_rule_based};
use georag_core::ranking::{dominates, pareto_frontier, select};
use georag_core::retrieval::retrieve_sparse;
use georag_core::synth::synth_city;
use georag_core::{
    evaluate, Baseline, Category, Coord, Corpus, Engine, FusionWeights, Gateway, Gazetteer, GazetteerEntry, Geometry,
    HashEmbedder, Length, LexiconMasker, ParetoPoint, PipelineConfig, PoiInput, Polygon, QueryInput, QueryKind,
    SpatialQuery, System, TradeoffWeights, WeightPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---- random corpora -------------------------------------------------------

const LON: (f64, f64) = (-74.05, -73.85);
const LAT: (f64, f64) = (40.65, 40.85);

fn coord(rng: &mut ChaCha8Rng) -> Coord {
    Coord::new(rng.gen_range(LON.0..LON.1), rng.gen_range(LAT.0..LAT.1)).unwrap()
}

fn near(rng: &mut ChaCha8Rng, c: Coord, spread: f64) -> Coord {
    Coord::new(
        c.lon() + rng.gen_range(-spread..spread),
        c.lat() + rng.gen_range(-spread..spread),
    )
    .unwrap()
}

fn triangle(rng: &mut ChaCha8Rng, c: Coord, size: f64) -> Polygon {
    loop {
        let (a, b) = (near(rng, c, size), near(rng, c, size));
        let area = (a.lon() - c.lon()) * (b.lat() - c.lat()) - (b.lon() - c.lon()) * (a.lat() - c.lat());
        if area.abs() > size * size * 0.05 {
            return Polygon::new(vec![c, a, b, c], vec![]).unwrap();
        }
    }
}

fn random_geometry(rng: &mut ChaCha8Rng) -> Geometry {
    let c = coord(rng);
    match rng.gen_range(0..20) {
        0..=13 => Geometry::Point(c),
        14..=16 => {
            let n = rng.gen_range(2..5);
            let mut pts = vec![c];
            while pts.len() < n {
                let last = *pts.last().unwrap();
                pts.push(near(rng, last, 0.006));
            }
            Geometry::polyline(pts).unwrap()
        }
        17 | 18 => {
            let (w, h) = (rng.gen_range(0.0005..0.006), rng.gen_range(0.0005..0.006));
            Geometry::Polygon(Polygon::rect(c.lon(), c.lat(), c.lon() + w, c.lat() + h).unwrap())
        }
        _ => Geometry::Polygon(triangle(rng, c, 0.004)),
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, embedder: &HashEmbedder) -> Corpus {
    let n = rng.gen_range(200..=2000);
    let pois = (0..n)
        .map(|i| PoiInput {
            id: format!("p{i:04}"),
            name: format!("Place {i}"),
            category: Category::ALL[rng.gen_range(0..Category::ALL.len())],
            geometry: random_geometry(rng),
            reviews: vec![],
        })
        .collect();
    Corpus::build(pois, Gazetteer::default(), embedder, &LexiconMasker).unwrap()
}

fn random_category(rng: &mut ChaCha8Rng) -> Option<Category> {
    if rng.gen_bool(0.5) {
        None
    } else {
        Some(Category::ALL[rng.gen_range(0..Category::ALL.len())])
    }
}

fn random_query(rng: &mut ChaCha8Rng, kind: QueryKind) -> SpatialQuery {
    let cat = random_category(rng);
    match kind {
        QueryKind::PointRadius => {
            let pts: Vec<Coord> = (0..rng.gen_range(1..=3)).map(|_| coord(rng)).collect();
            SpatialQuery::point_radius(&pts, Length::from_km(rng.gen_range(0.05..3.0)), cat, "").unwrap()
        }
        QueryKind::RouteBuffer => {
            let a = coord(rng);
            let b = near(rng, a, 0.05);
            SpatialQuery::route_buffer(a, b, Length::from_meters(rng.gen_range(50.0..2000.0)), cat, "").unwrap()
        }
        QueryKind::RegionContain => {
            let c = coord(rng);
            let region = if rng.gen_bool(0.5) {
                let (w, h) = (rng.gen_range(0.005..0.08), rng.gen_range(0.005..0.08));
                Polygon::rect(c.lon(), c.lat(), c.lon() + w, c.lat() + h).unwrap()
            } else {
                triangle(rng, c, 0.06)
            };
            SpatialQuery::region_contain("r", Geometry::Polygon(region), cat, "").unwrap()
        }
    }
}

/// Brute force over every record: the candidate ids and their distances.
fn linear_scan(sq: &SpatialQuery, corpus: &Corpus) -> Vec<(String, f64)> {
    let refs = sq.search_geometries();
    corpus
        .records()
        .iter()
        .filter(|r| sq.target_category().map_or(true, |c| c == r.category))
        .filter_map(|r| match sq.kind() {
            QueryKind::RegionContain => contains(&refs[0], &r.geometry).unwrap().then(|| (r.id.clone(), 0.0)),
            _ => {
                let d = refs
                    .iter()
                    .map(|g| distance(&r.geometry, g).unwrap())
                    .fold(f64::INFINITY, f64::min);
                (d <= sq.eps().unwrap().km()).then(|| (r.id.clone(), d))
            }
        })
        .collect()
}

const KINDS: [QueryKind; 3] = [QueryKind::PointRadius, QueryKind::RouteBuffer, QueryKind::RegionContain];

/// Criteria 1 and 2 share the randomized runs.
struct RetrievalRun {
    elapsed: Duration,
    queries: usize,
    candidates: usize,
    mismatch: Option<String>,
    law_violation: Option<String>,
}

fn retrieval_run() -> RetrievalRun {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20261018);
    let embedder = HashEmbedder::new(8);
    let mut run = RetrievalRun {
        elapsed: Duration::ZERO,
        queries: 0,
        candidates: 0,
        mismatch: None,
        law_violation: None,
    };
    for c in 0..50 {
        let corpus = random_corpus(&mut rng, &embedder);
        for kind in KINDS {
            for q in 0..20 {
                let sq = random_query(&mut rng, kind);
                let got = retrieve_sparse(&sq, &corpus).unwrap();
                let want = linear_scan(&sq, &corpus);
                run.queries += 1;
                run.candidates += got.len();
                let got_ids: BTreeSet<&str> = got.iter().map(|s| s.poi_id.as_str()).collect();
                let want_ids: BTreeSet<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
                if got_ids != want_ids && run.mismatch.is_none() {
                    run.mismatch = Some(format!(
                        "corpus {c} {kind} query {q}: index {} vs scan {}",
                        got_ids.len(),
                        want_ids.len()
                    ));
                }
                if run.law_violation.is_none() {
                    run.law_violation = sparse_law(&sq, &corpus, &got, &want).err();
                }
            }
        }
    }
    run.elapsed = start.elapsed();
    run
}

fn sparse_law(
    sq: &SpatialQuery,
    corpus: &Corpus,
    got: &[georag_core::retrieval::CandidateScores],
    scan: &[(String, f64)],
) -> Result<(), String> {
    let refs = sq.search_geometries();
    let mut outside: Vec<(f64, f64)> = Vec::new();
    for s in got {
        let g = &corpus.get(&s.poi_id).unwrap().geometry;
        let touching = match sq.kind() {
            QueryKind::RegionContain => true,
            _ => refs.iter().any(|r| intersects(g, r).unwrap()),
        };
        let d = scan.iter().find(|(id, _)| *id == s.poi_id).map_or(f64::NAN, |x| x.1);
        let expect = if touching { 1.0 } else { 1.0 / (1.0 + d) };
        if (s.f_sparse - expect).abs() >= 1e-12 {
            return Err(format!("{}: f_sparse {} expected {expect}", s.poi_id, s.f_sparse));
        }
        if !touching {
            outside.push((d, s.f_sparse));
        }
    }
    outside.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in outside.windows(2) {
        if w[0].0 < w[1].0 && w[0].1 <= w[1].1 {
            return Err(format!("distance {} < {} but score {} <= {}", w[0].0, w[1].0, w[0].1, w[1].1));
        }
    }
    Ok(())
}

fn criterion_1(run: &RetrievalRun) -> Outcome {
    ensure!(run.queries == 3000, "ran {} queries", run.queries);
    if let Some(m) = &run.mismatch {
        return Err(m.clone());
    }
    ensure!(run.elapsed < Duration::from_secs(60), "took {:.1?}", run.elapsed);
    Ok(format!(
        "{} queries on 50 corpora, {} candidates, identical sets, {:.1?}",
        run.queries, run.candidates, run.elapsed
    ))
}

fn criterion_2(run: &RetrievalRun) -> Outcome {
    match &run.law_violation {
        Some(v) => Err(v.clone()),
        None => Ok(format!("{} candidates within 1e-12, strictly decreasing in distance", run.candidates)),
    }
}

// ---- Pareto ----------------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for inst in 0..100 {
        let n = rng.gen_range(1..=500);
        // coarse grids on some instances force ties
        let grid = [0u32, 5, 20][inst % 3];
        let value = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.gen();
            if grid == 0 {
                v
            } else {
                (v * grid as f64).round() / grid as f64
            }
        };
        let pool: Vec<ParetoPoint> = (0..n)
            .map(|i| ParetoPoint::new(format!("c{i:03}"), value(&mut rng), value(&mut rng)).unwrap())
            .collect();
        let oracle: BTreeSet<&str> = pool
            .iter()
            .filter(|p| !pool.iter().any(|q| dominates(q, p)))
            .map(|p| p.poi_id.as_str())
            .collect();
        let front = pareto_frontier(&pool);
        let got: BTreeSet<&str> = front.iter().map(|p| p.poi_id.as_str()).collect();
        ensure!(got == oracle, "instance {inst}: frontier {} vs oracle {}", got.len(), oracle.len());
        ensure!(pareto_frontier(&front) == front, "instance {inst}: not idempotent");
        let s = rng.gen_range(0.01..0.99);
        let top = &select(&pool, TradeoffWeights::spatial(s).unwrap(), 1).unwrap()[0];
        ensure!(oracle.contains(top.poi_id.as_str()), "instance {inst}: top-1 {} off the frontier", top.poi_id);
    }
    Ok("100 instances match the dominance oracle, idempotent, top-1 on frontier".into())
}

// ---- degenerate fusion -----------------------------------------------------

fn fixed(lp: f64, ld: f64) -> PipelineConfig {
    PipelineConfig {
        fusion: FusionWeights::new(lp, ld).unwrap(),
        weights: WeightPolicy::Fixed(TradeoffWeights::new(1.0, 0.0).unwrap()),
        top_k: 1000,
        ..PipelineConfig::default()
    }
}

fn criterion_4() -> Outcome {
    let city = synth_city(99, 25);
    let embedder = HashEmbedder::default();
    let corpus = Corpus::build(city.pois, city.gazetteer, &embedder, &LexiconMasker).unwrap();
    let sparse = Engine::new(&corpus, &embedder, &LexiconMasker).with_config(fixed(1.0, 0.0));
    let dense = Engine::new(&corpus, &embedder, &LexiconMasker).with_config(fixed(0.0, 1.0));
    let runner = BaselineRunner::new(&corpus, &embedder, 1.0).unwrap();
    let ids = |t: &georag_core::Trace| t.answers.iter().map(|a| a.poi_id.clone()).collect::<Vec<_>>();
    let mut compared = 0;
    for (i, qa) in city.qa.iter().enumerate() {
        let input = QueryInput::Question {
            text: &qa.question,
            references: &qa.reference_spec,
        };
        let p = sparse.prepare(&input).map_err(|e| e.to_string())?;
        let sd = runner.rank(Baseline::Sd, &p).map_err(|e| e.to_string())?;
        let t = sparse.run_prepared(p, 1000).map_err(|e| e.to_string())?;
        ensure!(ids(&t) == sd, "query {i}: sparse-only order differs from SD");

        let t = dense.run(&input).map_err(|e| e.to_string())?;
        let mut by_cos: Vec<&ScoredCandidate> = t.candidates.iter().collect();
        by_cos.sort_by(|a, b| {
            b.scores
                .f_dense_spatial
                .total_cmp(&a.scores.f_dense_spatial)
                .then_with(|| a.scores.poi_id.cmp(&b.scores.poi_id))
        });
        let expect: Vec<String> = by_cos.iter().map(|c| c.scores.poi_id.clone()).collect();
        ensure!(ids(&t) == expect, "query {i}: dense-only order differs from cosine order");
        compared += t.answers.len();
    }
    Ok(format!("25 queries, {compared} ranked candidates, exact permutations"))
}

// ---- metrics ---------------------------------------------------------------

fn criterion_5() -> Outcome {
    let ranked: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let relevant: BTreeSet<String> = ["a", "c"].iter().map(|s| s.to_string()).collect();
    let n3 = ndcg_at_k(&ranked, &relevant, 3);
    ensure!((n3 - 0.9197).abs() <= 1e-4, "NDCG@3 = {n3}");

    let city = synth_city(5, 30);
    let embedder = HashEmbedder::default();
    let corpus = Corpus::build(city.pois, city.gazetteer, &embedder, &LexiconMasker).unwrap();
    let engine = Engine::new(&corpus, &embedder, &LexiconMasker);
    let systems = [
        System::Engine,
        System::Baseline(Baseline::Sd),
        System::Baseline(Baseline::Te),
        System::Baseline(Baseline::St),
    ];
    let report = evaluate(&engine, &city.qa, &DEFAULT_KS, &systems).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for s in &report.systems {
        for q in &s.per_query {
            ensure!(q.precision[&1] == q.ndcg[&1], "{} query {}: P@1 != NDCG@1", s.system, q.index);
            let r: Vec<f64> = DEFAULT_KS.iter().map(|k| q.recall[k]).collect();
            ensure!(r.windows(2).all(|w| w[0] <= w[1]), "{} query {}: recall not monotone {r:?}", s.system, q.index);
            checked += 1;
        }
    }
    Ok(format!("NDCG@3 = {n3:.4}; P@1 == NDCG@1 and monotone recall on {checked} rankings"))
}

// ---- planted benchmark -----------------------------------------------------

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let city = synth_city(2026, 100);
    ensure!(city.pois.len() == 1000 && city.qa.len() == 100, "city has {} POIs", city.pois.len());
    let embedder = HashEmbedder::default();
    let corpus = Corpus::build(city.pois, city.gazetteer, &embedder, &LexiconMasker).unwrap();
    let engine = Engine::new(&corpus, &embedder, &LexiconMasker);
    let systems = [System::Engine, System::Baseline(Baseline::Sd), System::Baseline(Baseline::Te)];
    let report = evaluate(&engine, &city.qa, &DEFAULT_KS, &systems).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let get = |s: System| {
        let r = report.system(s).unwrap();
        (r.precision[&1], r.ndcg[&10])
    };
    let (p, n) = get(System::Engine);
    let (sd_p, sd_n) = get(System::Baseline(Baseline::Sd));
    let (te_p, te_n) = get(System::Baseline(Baseline::Te));
    let summary = format!(
        "engine P@1 {p:.2} NDCG@10 {n:.2}; SD {sd_p:.2}/{sd_n:.2}; TE {te_p:.2}/{te_n:.2}; {elapsed:.1?}"
    );
    ensure!(p == 1.0 && n == 1.0, "{summary}");
    ensure!(sd_p < p && sd_n < n && te_p < p && te_n < n, "baselines not lower: {summary}");
    ensure!(elapsed < Duration::from_secs(30), "too slow: {summary}");
    Ok(summary)
}

// ---- parser decision table ---------------------------------------------------

fn criterion_7() -> Outcome {
    let gazetteer = Gazetteer::new(vec![GazetteerEntry {
        name: "Manhattan".into(),
        aliases: vec![],
        polygon: Geometry::Polygon(Polygon::rect(-74.02, 40.70, -73.93, 40.88).unwrap()),
    }])
    .unwrap();
    let gateway = Gateway::new(Box::new(OfflineChat));
    let pts = [
        Coord::new(-73.99, 40.75).unwrap(),
        Coord::new(-73.97, 40.76).unwrap(),
        Coord::new(-73.98, 40.74).unwrap(),
    ];
    let mut rows = 0;
    for count in 1..=3 {
        for region in [false, true] {
            for route in [false, true] {
                let mut q = String::from("Find a restaurant");
                if route {
                    q.push_str(" along the route between these places");
                } else {
                    q.push_str(" close to these places");
                }
                if region {
                    q.push_str(" in Manhattan");
                }
                q.push('.');
                let expect = if count == 2 && route {
                    QueryKind::RouteBuffer
                } else if region {
                    QueryKind::RegionContain
                } else {
                    QueryKind::PointRadius
                };
                let (rule, _) = parse_rule_based(&q, &pts[..count], &gazetteer).map_err(|e| e.to_string())?;
                ensure!(rule.kind() == expect, "rules: {count} points, {q:?} gave {}", rule.kind());
                let (llm, _) = parse_with_llm(&q, &pts[..count], &gazetteer, &gateway).map_err(|e| e.to_string())?;
                ensure!(llm.kind() == expect, "model path: {count} points, {q:?} gave {}", llm.kind());
                rows += 1;
            }
        }
    }
    let point = [
        ("Anything nearby?", 1.0),
        ("Anything within walking distance?", 2.0),
        ("Anything not too far?", 3.0),
    ];
    for (q, km) in point {
        let e = estimate_epsilon(q, QueryKind::PointRadius).unwrap();
        ensure!(e.km() == km, "{q:?} gave {} km", e.km());
    }
    let route = [
        ("Stops on my walk along the route", 1000.0),
        ("Stops along the route", 2000.0),
        ("Scenic stops along the route", 3000.0),
    ];
    for (q, m) in route {
        let e = estimate_epsilon(q, QueryKind::RouteBuffer).unwrap();
        ensure!(e.meters() == m, "{q:?} gave {} m", e.meters());
    }
    ensure!(estimate_epsilon("x", QueryKind::RegionContain).is_none(), "region query got a distance");
    Ok(format!("{rows} combinations on both parsers; point 1/2/3 km and route 1000/2000/3000 m"))
}

// ---- CLI determinism and store round trip ------------------------------------

fn cli(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<OsString> = std::iter::once("georag").chain(args.iter().copied()).map(Into::into).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = georag_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn cli_ok(args: &[&str]) -> Result<String, String> {
    match cli(args) {
        (0, out, _) => Ok(out),
        (code, _, err) => Err(format!("{args:?} exited {code}: {err}")),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth → ingest → query → eval in a fresh directory; returns the query
/// and eval outputs.
fn pipeline_outputs(dir: &Path) -> Result<Vec<String>, String> {
    let city = dir.join("city");
    let store = dir.join("store");
    cli_ok(&["synth", "--out", p(&city), "--seed", "41", "--neighborhoods", "30"])?;
    cli_ok(&[
        "ingest",
        "--pois",
        p(&city.join("pois.geojson")),
        "--gazetteer",
        p(&city.join("gazetteer.geojson")),
        "--store",
        p(&store),
    ])?;
    let qa = city.join("qa.jsonl");
    let first = std::fs::read_to_string(&qa).map_err(|e| e.to_string())?;
    let pair: serde_json::Value = serde_json::from_str(first.lines().nth(7).unwrap()).unwrap();
    let question = pair["question"].as_str().unwrap();
    let refs: Vec<&str> = pair["reference_spec"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut outputs = Vec::new();
    for format in ["table", "json", "geojson"] {
        let mut args = vec!["query", question, "--store", p(&store), "--format", format];
        args.extend(["--parser", "llm", "--weights", "llm"]);
        for r in &refs {
            args.extend(["--at", r]);
        }
        outputs.push(cli_ok(&args)?);
    }
    for format in ["table", "json", "csv"] {
        outputs.push(cli_ok(&[
            "eval",
            "--qa",
            p(&qa),
            "--store",
            p(&store),
            "--format",
            format,
            "--parser",
            "llm",
        ])?);
    }
    Ok(outputs)
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline_outputs(a.path())?;
    let second = pipeline_outputs(b.path())?;
    let labels = ["query table", "query json", "query geojson", "eval table", "eval json", "eval csv"];
    for ((x, y), label) in first.iter().zip(&second).zip(labels) {
        ensure!(x == y, "{label} output differs between runs");
        ensure!(!x.is_empty(), "{label} output is empty");
    }
    let bytes: usize = first.iter().map(String::len).sum();
    Ok(format!("6 outputs byte-identical across two runs ({bytes} bytes)"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let city = dir.path().join("city");
    cli_ok(&["synth", "--out", p(&city), "--seed", "8", "--neighborhoods", "40"])?;
    let pois = city.join("pois.geojson");
    let gaz = city.join("gazetteer.geojson");
    let ingest = |store: &Path| cli_ok(&["ingest", "--pois", p(&pois), "--gazetteer", p(&gaz), "--store", p(store)]);
    let s1 = dir.path().join("s1");
    let s2 = dir.path().join("s2");
    ingest(&s1)?;
    let m1 = corpus::read_manifest(&s1).map_err(|e| e.to_string())?;
    ingest(&s1)?;
    let again = corpus::read_manifest(&s1).map_err(|e| e.to_string())?;
    ingest(&s2)?;
    let m2 = corpus::read_manifest(&s2).map_err(|e| e.to_string())?;
    ensure!(m1.checksums == again.checksums, "re-ingest into the same store changed checksums");
    ensure!(m1.checksums == m2.checksums, "ingest into a second store gave other checksums");
    ensure!(m1.fingerprint() == m2.fingerprint(), "manifests differ");

    let loaded = corpus::load(&s1).map_err(|e| e.to_string())?;
    let built = Corpus::build(
        read_pois(&pois).map_err(|e| e.to_string())?,
        read_gazetteer(&gaz).map_err(|e| e.to_string())?,
        &HashEmbedder::default(),
        &LexiconMasker,
    )
    .map_err(|e| e.to_string())?;
    ensure!(loaded == built, "loaded corpus differs from the ingested one");
    ensure!(loaded.fingerprint() == built.fingerprint(), "corpus fingerprints differ");
    Ok(format!(
        "{} records, {} checksums stable across re-ingest, load equals build",
        loaded.len(),
        m1.checksums.len()
    ))
}

fn main() {
    // keep panic messages inside the report
    panic::set_hook(Box::new(|_| {}));
    let guard = |f: &dyn Fn() -> Outcome| -> Outcome {
        panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        })
    };
    let run = panic::catch_unwind(retrieval_run).ok();
    let need_run = |f: fn(&RetrievalRun) -> Outcome| -> Outcome {
        match &run {
            Some(r) => f(r),
            None => Err("randomized retrieval run panicked".into()),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("retrieval equals linear scan", Box::new(|| need_run(criterion_1))),
        ("sparse score law", Box::new(|| need_run(criterion_2))),
        ("pareto frontier correctness", Box::new(criterion_3)),
        ("degenerate fusion ordering", Box::new(criterion_4)),
        ("ranking metrics", Box::new(criterion_5)),
        ("planted-truth benchmark", Box::new(criterion_6)),
        ("parser decision table", Box::new(criterion_7)),
        ("cli determinism", Box::new(criterion_8)),
        ("ingest idempotence and round trip", Box::new(criterion_9)),
    ];
    let mut failed = HashSet::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match guard(f.as_ref()) {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {}. {name}: {why}", i + 1);
                failed.insert(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
