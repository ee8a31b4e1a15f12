use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn citeqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citeqa")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_toy(dir: &Path) -> PathBuf {
    let out = dir.join("toy.json");
    let o = citeqa(&["build", "--input", s(&fixture("toy50.jsonl")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn build_reports_gates_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let report = dir.path().join("r.json");
    let o = citeqa(&[
        "build",
        "--input",
        s(&fixture("toy50.jsonl")),
        "--out",
        s(&out),
        "--rouge-threshold",
        "0.0",
        "--report",
        s(&report),
    ]);
    assert!(o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("relevance 1"), "{stderr}");
    assert!(stderr.contains("threshold 0.000000"), "{stderr}");
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["filter"]["input"], 50);
    assert_eq!(r["filter"]["truncated"], 1);
    assert!(r["examples"].as_u64().unwrap() > 0);
}

#[test]
fn build_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let missing = citeqa(&["build", "--input", "/nonexistent.jsonl", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));
    let short = citeqa(&["build", "--input", s(&fixture("short.jsonl")), "--out", s(&out)]);
    assert_eq!(short.status.code(), Some(3));
    assert!(!out.exists());
    let bad = citeqa(&[
        "build",
        "--input",
        s(&fixture("toy50.jsonl")),
        "--out",
        s(&out),
        "--rouge-threshold",
        "2",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn build_skips_invalid_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mixed.jsonl");
    let good = fs::read_to_string(fixture("toy50.jsonl")).unwrap();
    fs::write(&input, format!("{{broken\n{good}")).unwrap();
    let out = dir.path().join("d.json");
    let o = citeqa(&["build", "--input", s(&input), "--out", s(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 invalid"));
}

#[test]
fn identity_and_noise_translators() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["identity", "noise"] {
        let out = dir.path().join(format!("{t}.json"));
        let o = citeqa(&[
            "build",
            "--input",
            s(&fixture("toy50.jsonl")),
            "--out",
            s(&out),
            "--translator",
            t,
        ]);
        assert!(o.status.success(), "{t}");
        assert!(fs::read_to_string(&out)
            .unwrap()
            .contains(&format!("\"method\":\"{t}\"")));
    }
    let o = citeqa(&[
        "build",
        "--input",
        s(&fixture("toy50.jsonl")),
        "--out",
        "x",
        "--translator",
        "unmt",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stats_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_toy(dir.path());
    let o = citeqa(&["stats", "--data", s(&data)]);
    assert!(o.status.success());
    let stats: Value = serde_json::from_slice(&o.stdout).unwrap();
    let n = stats["examples"].as_u64().unwrap();
    let by_cat: u64 = stats["categories"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    let by_len: u64 = stats["question_lengths"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!((by_cat, by_len), (n, n));

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let o = citeqa(&["stats", "--data", s(&empty)]);
    assert!(o.status.success());
    let stats: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["examples"], 0);
    assert_eq!(stats["non_ner_fraction"], 0.0);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"data\": 5}").unwrap();
    assert_eq!(citeqa(&["stats", "--data", s(&bad)]).status.code(), Some(2));
}

#[test]
fn refine_writes_batches_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_toy(dir.path());
    let out = dir.path().join("run");
    let o = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        "mock:first-entity",
        "--parts",
        "3",
        "--out-dir",
        s(&out),
        "--pairs",
        s(&fixture("toy50.jsonl")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..=3 {
        let batch = out.join(format!("batch_{k}.json"));
        let v: Value = serde_json::from_slice(&fs::read(&batch).unwrap()).unwrap();
        assert_eq!(v["version"], "1.1");
    }
    assert!(!out.join("batch_4.json").exists());
    let report = fs::read_to_string(out.join("report.jsonl")).unwrap();
    let last: Value = serde_json::from_str(report.lines().last().unwrap()).unwrap();
    assert_eq!(last["type"], "summary");
    assert_eq!(last["batches_emitted"], 4);
    assert_eq!(last["taus"].as_array().unwrap().len(), 3);
}

#[test]
fn refine_with_table_predictor() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_toy(dir.path());
    let squad: Value = serde_json::from_slice(&fs::read(&data).unwrap()).unwrap();
    let mut table = serde_json::Map::new();
    for article in squad["data"].as_array().unwrap() {
        for para in article["paragraphs"].as_array().unwrap() {
            for qa in para["qas"].as_array().unwrap() {
                let a = &qa["answers"][0];
                table.insert(
                    qa["id"].as_str().unwrap().into(),
                    json!({"text": a["text"], "answer_start": a["answer_start"], "prob": 0.9}),
                );
            }
        }
    }
    let table_path = dir.path().join("table.json");
    fs::write(&table_path, Value::Object(table).to_string()).unwrap();
    let out = dir.path().join("run");
    let spec = format!("mock:table={}", table_path.display());
    let o = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        &spec,
        "--out-dir",
        s(&out),
        "--init-size",
        "20",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.jsonl")).unwrap();
    let summary: Value = serde_json::from_str(report.lines().last().unwrap()).unwrap();
    assert_eq!(summary["initial_size"], 20);
    assert_eq!(
        summary["verdicts"].as_object().unwrap().keys().collect::<Vec<_>>(),
        ["FilteredKeep"]
    );
}

#[test]
fn refine_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_toy(dir.path());
    let out = dir.path().join("run");
    let dead = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        "http://127.0.0.1:9",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(dead.status.code(), Some(2));
    let unknown = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        "oracle",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(unknown.status.code(), Some(2));
    let too_big = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        "mock:first-entity",
        "--out-dir",
        s(&out),
        "--init-size",
        "100000",
    ]);
    assert_eq!(too_big.status.code(), Some(2));
    let bad_ratio = citeqa(&[
        "refine",
        "--data",
        s(&data),
        "--predictor",
        "mock:first-entity",
        "--out-dir",
        s(&out),
        "--ratio",
        "0:1",
    ]);
    assert_eq!(bad_ratio.status.code(), Some(2));
}
