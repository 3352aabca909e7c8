use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use georag_cli::{run, EXIT_EXTERNAL, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

fn cli(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<OsString> = std::iter::once("georag").chain(args.iter().copied()).map(Into::into).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = cli(args);
    assert_eq!(code, EXIT_OK, "{args:?}: {err}");
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct City {
    _dir: TempDir,
    root: PathBuf,
}

impl City {
    fn new(seed: &str, neighborhoods: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(&["synth", "--out", s(&root.join("city")), "--seed", seed, "--neighborhoods", neighborhoods]);
        Self { _dir: dir, root }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join("city").join(name)
    }

    fn store(&self) -> PathBuf {
        self.root.join("store")
    }

    fn ingest(&self) -> String {
        ok(&[
            "ingest",
            "--pois",
            s(&self.file("pois.geojson")),
            "--gazetteer",
            s(&self.file("gazetteer.geojson")),
            "--store",
            s(&self.store()),
        ])
    }

    fn qa(&self, line: usize) -> (String, Vec<String>) {
        let text = fs::read_to_string(self.file("qa.jsonl")).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.lines().nth(line).unwrap()).unwrap();
        let refs = v["reference_spec"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_str().unwrap().to_string())
            .collect();
        (v["question"].as_str().unwrap().to_string(), refs)
    }
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("GEORAG_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; run with GEORAG_BLESS=1", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden copy");
}

#[test]
fn golden_outputs() {
    let city = City::new("3", "10");
    city.ingest();
    let manifest = fs::read_to_string(city.store().join("manifest.json")).unwrap();
    golden("manifest.json", &manifest);

    let store = city.store();
    let (q, refs) = city.qa(7);
    let mut args = vec!["query", q.as_str(), "--store", s(&store), "--format", "json"];
    for r in &refs {
        args.extend(["--at", r.as_str()]);
    }
    golden("query_route.json", &ok(&args));
    args.extend(["--format", "table"]);
    golden("query_route.txt", &ok(&args));

    let qa = city.file("qa.jsonl");
    golden("eval.csv", &ok(&["eval", "--qa", s(&qa), "--store", s(&store), "--format", "csv"]));
    golden("eval.txt", &ok(&["eval", "--qa", s(&qa), "--store", s(&store)]));
    let explain = ok(&["explain", "--dsl", "region(\"Amber Ward\") category restaurant", "--store", s(&store)]);
    golden("explain_region.txt", &explain);
}

#[test]
fn ingest_reports_counts_and_is_repeatable() {
    let city = City::new("4", "5");
    let first = city.ingest();
    assert!(first.starts_with("ingested 50 POIs and 0 regions"), "{first}");
    assert_eq!(city.ingest(), first);
}

#[test]
fn usage_errors_exit_2() {
    let city = City::new("5", "10");
    city.ingest();
    let store = city.store();
    let qa = city.file("qa.jsonl");
    let cases: Vec<Vec<&str>> = vec![
        vec!["ingest", "--pois", "/nonexistent/pois.geojson", "--store", s(&store)],
        vec!["query", "anything", "--store", "/nonexistent/store"],
        vec!["query", "--store", s(&store)],
        vec!["query", "x", "--store", s(&store), "--weights", "fixed:0.7,0.7"],
        vec!["query", "x", "--store", s(&store), "--lambda-p", "0", "--lambda-d", "0"],
        vec!["query", "x", "--store", s(&store), "--lambda-p", "-1"],
        vec!["query", "x", "--store", s(&store), "--parser", "regex"],
        vec!["query", "x", "--store", s(&store), "--embedder", "service"],
        vec!["query", "x", "--store", s(&store), "--embed-dim", "64"],
        vec!["query", "food near Nowhere", "--at", "Nowhere", "--store", s(&store)],
        vec!["query", "--dsl", "region(\"Atlantis\")", "--store", s(&store)],
        vec!["query", "--dsl", "point(1,2) radius", "--store", s(&store)],
        vec!["query", "x", "--store", s(&store), "--parser", "llm", "--gateway", "carrier-pigeon"],
        vec!["eval", "--qa", s(&qa), "--store", s(&store), "--baselines", "GeoLLM"],
        vec!["eval", "--qa", s(&qa), "--store", s(&store), "--k", "0"],
        vec!["eval", "--qa", s(&qa), "--store", s(&store), "--k", "three"],
        vec!["eval", "--qa", "/nonexistent/qa.jsonl", "--store", s(&store)],
        vec!["frobnicate"],
    ];
    for args in cases {
        let (code, out, err) = cli(&args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {out}{err}");
        assert!(!err.is_empty(), "{args:?} printed no error");
    }
}

#[test]
fn help_and_version_exit_0() {
    assert!(ok(&["--help"]).contains("eval"));
    assert!(ok(&["query", "--help"]).contains("--lambda-p"));
    assert!(ok(&["--version"]).starts_with("georag "));
}

#[test]
fn unreachable_embedding_service_exits_3() {
    let city = City::new("6", "2");
    let (code, _, err) = cli(&[
        "ingest",
        "--pois",
        s(&city.file("pois.geojson")),
        "--store",
        s(&city.store()),
        "--embedder",
        "service",
        "--embed-url",
        "http://127.0.0.1:9/v1/embeddings",
        "--embed-model",
        "m",
        "--embed-dim",
        "8",
    ]);
    assert_eq!(code, EXIT_EXTERNAL, "{err}");
}

#[test]
fn empty_result_is_success_with_message() {
    let city = City::new("7", "10");
    city.ingest();
    let store = city.store();
    let out = ok(&["query", "--dsl", "point(10,10) radius 1km", "--store", s(&store)]);
    assert!(out.contains("no answer"), "{out}");
    let json = ok(&["query", "--dsl", "point(10,10) radius 1km", "--store", s(&store), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["answers"].as_array().unwrap().len(), 0);
    assert!(v["message"].as_str().unwrap().contains("retrieval"));
    let explain = ok(&["explain", "--dsl", "point(10,10) radius 1km", "--store", s(&store)]);
    assert!(explain.trim_end().ends_with("stopped at retrieval: no candidates"), "{explain}");
}

#[test]
fn sparse_only_flags_follow_distance_order() {
    let city = City::new("8", "10");
    city.ingest();
    let store = city.store();
    let (q, refs) = city.qa(0);
    let mut args = vec!["query", q.as_str(), "--store", s(&store), "--format", "json", "--topk", "50"];
    args.extend(["--lambda-p", "1", "--lambda-d", "0", "--lambda-fixed", "1,0", "--at", refs[0].as_str()]);
    let v: serde_json::Value = serde_json::from_str(&ok(&args)).unwrap();
    let d: Vec<f64> = v["answers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["distance_km"].as_f64().unwrap())
        .collect();
    assert!(d.len() > 1);
    assert!(d.windows(2).all(|w| w[0] <= w[1]), "{d:?}");
}

#[test]
fn route_dsl_stays_in_the_buffer() {
    let city = City::new("9", "10");
    city.ingest();
    let dsl = "route(-73.99,40.6 ; -73.95,40.6) buffer 1000m";
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["query", "--dsl", dsl, "--store", s(&city.store()), "--format", "geojson", "--topk", "100"]))
            .unwrap();
    let feats = v["features"].as_array().unwrap();
    let answers: Vec<&serde_json::Value> = feats.iter().filter(|f| f["properties"]["role"] == "answer").collect();
    assert!(!answers.is_empty());
    assert!(answers.iter().all(|a| a["properties"]["distance_km"].as_f64().unwrap() <= 1.0));
    assert_eq!(feats.iter().filter(|f| f["properties"]["role"] == "buffer").count(), 1);
}

#[test]
fn region_dsl_puts_the_planted_answer_first() {
    let city = City::new("10", "10");
    city.ingest();
    let text = fs::read_to_string(city.file("qa.jsonl")).unwrap();
    let ward: serde_json::Value = serde_json::from_str(text.lines().nth(9).unwrap()).unwrap();
    let question = ward["question"].as_str().unwrap();
    let name = question.trim_start_matches("Any restaurant in ").split('?').next().unwrap();
    let craving = question.split("? ").nth(1).unwrap();
    let dsl = format!("region(\"{name}\") category restaurant text \"{craving}\"");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["query", "--dsl", &dsl, "--store", s(&city.store()), "--format", "json"])).unwrap();
    assert_eq!(v["parse"]["by"], "bypassed");
    assert_eq!(v["answers"][0]["poi_id"], ward["relevant_ids"][0]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let city = City::new("11", "10");
    city.ingest();
    let conf = city.root.join("georag.conf");
    fs::write(
        &conf,
        format!("# shared settings\nstore = {}\nweights = fixed:1,0\nk = 1\nqa = {}\n", s(&city.store()), s(&city.file("qa.jsonl"))),
    )
    .unwrap();
    let out = ok(&["--config", s(&conf), "query", "--dsl", "point(-73.99,40.6) radius 500m"]);
    assert!(out.contains("(fixed:1,0)"), "{out}");
    let out = ok(&["query", "--config", s(&conf), "--dsl", "point(-73.99,40.6) radius 500m", "--weights", "heuristic"]);
    assert!(out.contains("(heuristic)"), "{out}");

    let report = ok(&["eval", "--config", s(&conf), "--baselines", "none"]);
    let header = report.lines().nth(1).unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["system", "metric", "@1"]);
    assert_eq!(report.lines().count(), 6);

    fs::write(&conf, "colour = red\n").unwrap();
    assert_eq!(cli(&["--config", s(&conf), "query", "x"]).0, EXIT_USAGE);
}

#[test]
fn eval_writes_the_report_file() {
    let city = City::new("12", "10");
    city.ingest();
    let out_file = city.root.join("report.json");
    let msg = ok(&[
        "eval",
        "--qa",
        s(&city.file("qa.jsonl")),
        "--store",
        s(&city.store()),
        "--format",
        "json",
        "--out",
        s(&out_file),
    ]);
    assert!(msg.starts_with("wrote "));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_file).unwrap()).unwrap();
    assert_eq!(v["query_count"], 10);
    assert_eq!(v["systems"].as_array().unwrap().len(), 4);
}

#[test]
fn model_paths_run_offline_and_from_fixtures() {
    let city = City::new("13", "10");
    city.ingest();
    let store = city.store();
    let (q, refs) = city.qa(0);
    let base = |extra: &[&str]| {
        let mut args = vec!["explain", q.as_str(), "--store", s(&store), "--at", refs[0].as_str()];
        args.extend(extra);
        ok(&args)
    };
    let offline = base(&["--parser", "llm", "--weights", "llm"]);
    assert!(offline.starts_with("[parse] llm"), "{offline}");
    assert!(offline.contains("[rerank] "), "{offline}");

    // an empty fixture directory makes every model call fail, so parsing
    // falls back to rules and reranking keeps the weighted order
    let fixtures = city.root.join("fixtures");
    fs::create_dir_all(&fixtures).unwrap();
    let replay = format!("replay:{}", s(&fixtures));
    let fallback = base(&["--parser", "llm", "--weights", "llm", "--gateway", &replay]);
    assert!(fallback.starts_with("[parse] rule (llm parser failed"), "{fallback}");
    assert!(fallback.contains("[rerank] fell back"), "{fallback}");
}
