use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

const QUESTION: &str = "Which river runs through the town where the painter Corvin Hale lived?";

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn hoprank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoprank"))
        .args(args)
        .env_remove("HOPRANK_BACKEND")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hoprank(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus() -> &'static str {
    static P: OnceLock<String> = OnceLock::new();
    P.get_or_init(|| fixture("e2e/corpus.jsonl").to_str().unwrap().to_string())
}

fn dataset() -> &'static str {
    static P: OnceLock<String> = OnceLock::new();
    P.get_or_init(|| fixture("e2e/qa.jsonl").to_str().unwrap().to_string())
}

const SMALL: [&str; 6] = ["--f", "6", "--k", "2", "--l", "3"];

fn manifest(out: &Path) -> Value {
    let p = format!("{}.manifest.json", out.display());
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_jsonl(p: &Path) -> Vec<Value> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn build_index_writes_index_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.idx");
    let b = dir.path().join("b.idx");
    ok(&["build-index", "--corpus", corpus(), "--out", s(&a)]);
    ok(&["build-index", "--corpus", corpus(), "--out", s(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m = manifest(&a);
    assert_eq!(m["command"], "build-index");
    assert_eq!(m["input_digests"], manifest(&b)["input_digests"]);
    assert_eq!(m["input_digests"].as_object().unwrap().len(), 1);
    assert!(m["finished_at"].is_string());
}

#[test]
fn missing_corpus_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.jsonl");
    let out = hoprank(&["build-index", "--corpus", s(&missing), "--out", s(&dir.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.jsonl"));
}

#[test]
fn retrieve_single_question_with_saved_index() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("c.idx");
    let run = dir.path().join("run.jsonl");
    ok(&["build-index", "--corpus", corpus(), "--out", s(&idx)]);
    let mut args = vec!["retrieve", QUESTION, "--corpus", corpus(), "--index", s(&idx), "--out", s(&run)];
    args.extend(SMALL);
    let stdout = ok(&args);
    assert!(stdout.contains("Corvin Hale -> Marsh End"));
    let records = read_jsonl(&run);
    assert_eq!(records.len(), 1);
    let docs: Vec<&str> = records[0]["docs"].as_array().unwrap()[..2]
        .iter()
        .map(|d| d["title"].as_str().unwrap())
        .collect();
    assert_eq!(docs, ["Corvin Hale", "Marsh End"]);
    let m = manifest(&run);
    assert_eq!(m["command"], "retrieve");
    assert_eq!(m["input_digests"].as_object().unwrap().len(), 2);
}

#[test]
fn retrieve_reads_a_question_file() {
    let dir = tempfile::tempdir().unwrap();
    let qfile = dir.path().join("questions.txt");
    std::fs::write(&qfile, format!("{QUESTION}\n{{\"id\":\"x7\",\"question\":\"Where is Tide Museum?\"}}\n")).unwrap();
    let run = dir.path().join("run.jsonl");
    let mut args = vec!["retrieve", s(&qfile), "--corpus", corpus(), "--out", s(&run), "--workers", "2"];
    args.extend(SMALL);
    ok(&args);
    let ids: Vec<String> = read_jsonl(&run).iter().map(|r| r["qid"].as_str().unwrap().to_string()).collect();
    assert_eq!(ids, ["q1", "x7"]);
}

#[test]
fn single_hop_and_baseline_rankers() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.jsonl");
    let mut args = vec!["retrieve", QUESTION, "--corpus", corpus(), "--out", s(&run), "--single-hop"];
    args.extend(SMALL);
    ok(&args);
    assert!(!read_jsonl(&run)[0]["docs"].as_array().unwrap().is_empty());

    let out = ok(&["retrieve", QUESTION, "--corpus", corpus(), "--out", s(&run), "--ranker", "tfidf"]);
    assert!(out.lines().nth(2).unwrap().contains("Hale Gallery"));
    let bad = hoprank(&["retrieve", QUESTION, "--corpus", corpus(), "--out", s(&run), "--ranker", "dense"]);
    assert!(!bad.status.success());
}

#[test]
fn unreachable_backend_fails_naming_the_endpoint() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("127.0.0.1:{port}");
    let dir = tempfile::tempdir().unwrap();
    let out = hoprank(&[
        "retrieve",
        QUESTION,
        "--corpus",
        corpus(),
        "--backend",
        &endpoint,
        "--out",
        s(&dir.path().join("r.jsonl")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(&endpoint));
}

#[test]
fn eval_writes_report_runs_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("report.json");
    let mut args = vec!["eval", "--corpus", corpus(), "--dataset", dataset(), "--out", s(&rep)];
    args.extend(SMALL);
    ok(&args);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    let first = &report["aggregates"]["recall"][0];
    assert_eq!(first["k"], 2);
    assert_eq!(first["value"], 1.0);
    let csv = std::fs::read_to_string(dir.path().join("report.json.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("metric,k,value"));
    assert_eq!(read_jsonl(&dir.path().join("report.json.runs.jsonl")).len(), 1);

    let again = dir.path().join("again.json");
    let mut args = vec!["eval", "--corpus", corpus(), "--dataset", dataset(), "--out", s(&again)];
    args.extend(SMALL);
    ok(&args);
    assert_eq!(std::fs::read(&rep).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn instruction_search_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let mut args = vec![
            "search-instructions",
            "--corpus",
            corpus(),
            "--dataset",
            dataset(),
            "--n",
            "10",
            "--out",
            s(out),
        ];
        args.extend(SMALL);
        ok(&args);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let records = read_jsonl(&a);
    assert_eq!(records.len(), 10);
    assert!(records.iter().all(|r| r["dev_r2"].is_number()));

    let run = dir.path().join("run.jsonl");
    let mut args = vec![
        "retrieve",
        QUESTION,
        "--corpus",
        corpus(),
        "--instructions",
        s(&a),
        "--n-instructions",
        "3",
        "--out",
        s(&run),
    ];
    args.extend(SMALL);
    ok(&args);
    assert_eq!(manifest(&run)["config"]["settings"]["retrieval"]["instructions"].as_array().unwrap().len(), 3);
}

#[test]
fn temperature_sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let mut args = vec![
        "sweep-temperature",
        "--corpus",
        corpus(),
        "--dataset",
        dataset(),
        "--grid",
        "1.0,1.2,1.4",
        "--out",
        s(&out),
    ];
    args.extend(SMALL);
    let stdout = ok(&args);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), ["temperature,r_at_2", "1.0,1", "1.2,1", "1.4,1"]);
    assert!(stdout.contains("selected temperature: 1.0"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("corpus = {:?}\nf = 6\nk = [2]\nl = 3\ntemperature = 2.0\n", corpus()),
    )
    .unwrap();
    let run = dir.path().join("run.jsonl");
    ok(&["--config", s(&cfg), "retrieve", QUESTION, "--temperature", "1.2", "--out", s(&run)]);
    let r = &manifest(&run)["config"]["settings"]["retrieval"];
    assert_eq!(r["temperature"], 1.2);
    assert_eq!(r["f"], 6);

    std::fs::write(&cfg, "corpus = \"c.jsonl\"\ntempurature = 1.0\n").unwrap();
    let bad = hoprank(&["--config", s(&cfg), "retrieve", QUESTION]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("tempurature"));
}
