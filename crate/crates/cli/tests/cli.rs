use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use sonder_core::completeness::{score_corpus, Lambda};
use sonder_core::embedding::{build_embedder, EmbedderConfig};
use tempfile::TempDir;

fn sonder(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonder"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .env_remove("SONDER_DATA_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn record(query: &str, rank: u32, title: &str, snippet: &str) -> String {
    serde_json::json!({
        "query": query, "country": "US", "date": "2023-05-01", "rank": rank, "kind": "web",
        "title": title, "snippet": snippet, "url": format!("https://news{rank}.example.com/a"),
    })
    .to_string()
}

/// A single-result query and a four-result query whose relevance and
/// completeness orders disagree.
fn seeded_store() -> TempDir {
    let dir = TempDir::new().unwrap();
    let lines = [
        record("lonely", 1, "lonely result", "only one"),
        record("alpha", 1, "beta", "beta"),
        record("alpha", 2, "alpha alpha", "alpha"),
        record("alpha", 3, "beta gamma", "beta delta"),
        record("alpha", 4, "alpha beta", "gamma"),
    ];
    let input = dir.path().join("in.jsonl");
    std::fs::write(&input, lines.join("\n")).unwrap();
    let out = sonder(&dir.path().join("store"), &["ingest", "--input", input.to_str().unwrap(), "--strict"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["accepted"], 5);
    dir
}

#[test]
fn unknown_subcommand_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = sonder(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = TempDir::new().unwrap();
    let out = sonder(dir.path(), &["curve", "US:2023-05-01:web:missing"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn single_result_curve() {
    let dir = seeded_store();
    let out = stdout(&sonder(&dir.path().join("store"), &["curve", "US:2023-05-01:web:lonely"]));
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 4, "{out}");
    let num = |s: &str| s.parse::<f64>().unwrap();
    assert_eq!((num(rows[1][1]), num(rows[1][2])), (0.0, 0.0));
    assert_eq!((num(rows[2][1]), num(rows[2][2])), (1.0, 1.0));
    assert_eq!(rows[3][0], "AUC");
    assert_eq!(num(rows[3][1]), 1.0);
}

fn ranks(out: &str) -> Vec<u32> {
    out.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect()
}

#[test]
fn rank_lambda_endpoints_follow_their_sort_keys() {
    let dir = seeded_store();
    let store = dir.path().join("store");
    let by_rel = ranks(&stdout(&sonder(&store, &["rank", "US:2023-05-01:web:alpha", "--lambda", "0"])));
    let by_comp = ranks(&stdout(&sonder(&store, &["rank", "US:2023-05-01:web:alpha", "--lambda", "1"])));
    assert_ne!(by_rel, by_comp);

    // oracle: score the same texts directly, sort by each key
    let texts = ["beta beta", "alpha alpha alpha", "beta gamma beta delta", "alpha beta gamma"];
    let emb = build_embedder(&EmbedderConfig::default()).unwrap();
    let vecs = emb.embed_batch(&texts).unwrap();
    let ids: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
    let s = score_corpus(&emb.embed("alpha").unwrap(), &vecs, &ids, None, Lambda::RELEVANCE_ONLY).unwrap();
    let order = |key: fn(&sonder_core::completeness::ScoredResult) -> f64| {
        let mut v: Vec<_> = s.results.iter().collect();
        v.sort_by(|a, b| key(b).total_cmp(&key(a)).then(a.rank.cmp(&b.rank)));
        v.iter().map(|r| r.rank).collect::<Vec<u32>>()
    };
    assert_eq!(by_rel, order(|r| r.relevance));
    assert_eq!(by_comp, order(|r| r.completeness));
}

#[test]
fn analyze_writes_outputs() {
    let dir = seeded_store();
    let store = dir.path().join("store");
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    stdout(&sonder(&store, &["analyze", "aggregate", "--out", o]));
    let agg = std::fs::read_to_string(out.join("aggregates.csv")).unwrap();
    assert_eq!(agg.lines().count(), 2, "{agg}");
    stdout(&sonder(&store, &["analyze", "curves", "--out", o]));
    assert!(std::fs::read_to_string(out.join("region_curves.csv")).unwrap().contains("fraction"));
    let table = stdout(&sonder(&store, &["analyze", "regress", "--synthetic", "--out", o]));
    assert!(table.contains("press_restriction"));
    assert!(out.join("regression.csv").exists());
    let missing = sonder(&store, &["analyze", "regress", "--out", o]);
    assert!(!missing.status.success());
}

#[test]
fn simulate_writes_exports() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let text = stdout(&sonder(dir.path(), &["simulate", "--seed", "3", "--out", out.to_str().unwrap()]));
    assert!(text.contains("o2_max_rank"));
    for f in ["participants.csv", "clicks.csv", "outcomes.csv", "effects.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let participants = std::fs::read_to_string(out.join("participants.csv")).unwrap();
    assert_eq!(participants.lines().count(), 877);
}

#[test]
fn pagerank_writes_normalized_weights() {
    let dir = TempDir::new().unwrap();
    let edges = dir.path().join("edges.csv");
    std::fs::write(&edges, "from,to\na.com,b.com\nb.com,a.com\nc.com,a.com\n").unwrap();
    let out = dir.path().join("w.json");
    stdout(&sonder(dir.path(), &["pagerank", "--edges", edges.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let w: std::collections::BTreeMap<String, f64> =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(w.len(), 3);
    assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-9);

    // the weights file feeds the curve command
    let store = seeded_store();
    stdout(&sonder(
        &store.path().join("store"),
        &["curve", "US:2023-05-01:web:alpha", "--weights", out.to_str().unwrap()],
    ));
}

#[test]
fn serve_answers_health_probe() {
    let dir = TempDir::new().unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_sonder"))
        .arg("--data-dir")
        .arg(dir.path())
        .args(["serve", "--port", &port.to_string()])
        .env_remove("SONDER_DATA_DIR")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let response = loop {
        if let Ok(mut s) = TcpStream::connect(("127.0.0.1", port)) {
            s.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
            let mut buf = String::new();
            s.read_to_string(&mut buf).unwrap();
            break buf;
        }
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
}
