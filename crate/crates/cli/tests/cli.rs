use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use scribe_core::corpusgen::GeneratorConfig;
use serde_json::Value;

fn scribe(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_scribe")).args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "scribe {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = GeneratorConfig { visits: 700, ..GeneratorConfig::default() };
    std::fs::write(d.join("gen.json"), serde_json::to_string(&config).unwrap()).unwrap();
    let corpus = d.join("corpus");
    scribe(&["generate", "--config", p(&d.join("gen.json")), "--out", p(&corpus)]);
    let ontology = corpus.join("ontology.json");
    let train = corpus.join("train.jsonl");
    let test = corpus.join("test.jsonl");

    let out = scribe(&["ontology", "validate", p(&ontology)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("entries"));

    std::fs::write(d.join("note.txt"), "history of htn. denies fever").unwrap();
    let out = scribe(&["extract", "--ontology", p(&ontology), p(&d.join("note.txt"))]);
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["synonym"], "htn");
    assert_eq!(lines[0]["start"], 11);
    assert_eq!(lines[1]["polarity"], "NEGATED");

    let models = d.join("models");
    scribe(&["train", "--model", "all", "--corpus", p(&train), "--ontology", p(&ontology), "--out", p(&models)]);
    assert!(models.join("net.json").exists());
    let nb = d.join("nb.json");
    scribe(&["train", "--model", "symptom-nb", "--corpus", p(&train), "--ontology", p(&ontology), "--out", p(&nb)]);
    assert!(nb.exists());

    let out = scribe(&[
        "probe", "--model", p(&models.join("net.json")), "--bucket", "c_hf", "--corpus", p(&train), "--ontology",
        p(&ontology), "--top", "5",
    ]);
    let weights: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!weights.is_empty() && weights.len() <= 5);

    let first_visit: Value = serde_json::from_str(std::fs::read_to_string(&test).unwrap().lines().next().unwrap()).unwrap();
    std::fs::write(d.join("ctx.json"), first_visit.to_string()).unwrap();
    let out = scribe(&["featurize", "--ontology", p(&ontology), "--models", p(&models), p(&d.join("ctx.json"))]);
    let f: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(f["text"].is_array());
    assert!(f["most_abnormal_vital"].is_string());

    let report = d.join("report.json");
    let csv = d.join("report.csv");
    scribe(&[
        "evaluate", "--corpus", p(&test), "--ontology", p(&ontology), "--models", p(&models), "--policy", "top3",
        "--out", p(&report), "--csv", p(&csv), "--resamples", "50",
    ]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["policy"], "top3");
    assert_eq!(r["reports"].as_array().unwrap().len(), 12);
    assert_eq!(r["comparisons"].as_array().unwrap().len(), 6);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("engine,type,mrr"));
    assert!(table.lines().any(|l| l.starts_with("net,CONDITION,")));

    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_scribe"))
        .args(["serve", "--ontology", p(&ontology), "--models", p(&models), "--port", &port.to_string()])
        .args(["--patients", p(&test)])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let health = loop {
        if let Some(r) = http_get(port, "/v1/health") {
            break Some(r);
        }
        if Instant::now() > deadline {
            break None;
        }
        std::thread::sleep(Duration::from_millis(50));
    };
    let patients = http_get(port, "/v1/demo/patients");
    child.kill().unwrap();
    child.wait().unwrap();
    let health = health.expect("service came up");
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.contains("\"engine\":\"contextual\""));
    assert!(patients.unwrap().contains(first_visit["patient_id"].as_str().unwrap()));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"buckets\": [], \"entries\": [{}]}").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_scribe")).args(["ontology", "validate", p(&bad)]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("loading ontology"));
    let out = Command::new(env!("CARGO_BIN_EXE_scribe")).args(["evaluate", "--policy", "top0"]).output().unwrap();
    assert!(!out.status.success());
}
