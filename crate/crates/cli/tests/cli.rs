use std::path::Path;
use std::process::Command;

use limeade_core::harness::report::read_csv;
use serde_json::Value;

fn harness(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_harness")).args(args).output().unwrap()
}

fn summary(csv: &Path) -> Value {
    let p = csv.with_file_name(format!("{}.summary.json", csv.file_stem().unwrap().to_string_lossy()));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn image_study_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("image.json");
    std::fs::write(&config, r#"{"n_classes": 5, "n_seeds": 50, "pool_size": 400, "test_per_class": 50}"#).unwrap();
    let out = dir.path().join("out/image.csv");
    let o = harness(&[
        "image-study",
        "--config",
        config.to_str().unwrap(),
        "--classes",
        "2",
        "--seeds",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out).unwrap();
    let s = summary(&out);
    assert_eq!(s["config"]["n_classes"], 2);
    assert_eq!(s["config"]["n_seeds"], 6);
    assert_eq!(s["config"]["pool_size"], 400);
    assert_eq!(s["classes"].as_array().unwrap().len(), 2);
    let runs: u64 = s["classes"].as_array().unwrap().iter().map(|c| c["runs"].as_u64().unwrap()).sum();
    assert_eq!(rows.len() as u64, runs * 4);
    for key in ["baseline", "limeade", "t", "p", "adjusted_p"] {
        assert!(s["aggregate"].get(key).is_some(), "{key}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("all"));
}

#[test]
fn feed_sim_writes_rankings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("feed.csv");
    let dump = dir.path().join("rankings.json");
    let o = harness(&[
        "feed-sim",
        "--sizes",
        "2,5",
        "--feeds",
        "3",
        "--draws",
        "2",
        "--dump-rankings",
        dump.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_csv(&out).unwrap().len(), 3 * 2 * 2 * 2);
    let s = summary(&out);
    assert_eq!(s["sizes"].as_array().unwrap().len(), 2);
    let dumps: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(dump).unwrap()).unwrap();
    assert_eq!(dumps.len(), 3 * 2 * 2 * 2);
}

#[test]
fn tradeoff_rejects_infinite_gamma_and_runs_finite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = harness(&["tradeoff", "--gamma", "inf", "--sessions", "3", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("finite gamma"));

    let o = harness(&["tradeoff", "--gamma", "2", "--sessions", "3", "--actions", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["config"]["gamma"], 2.0);
    assert_eq!(s["greedy_curve"].as_array().unwrap().len(), 5);
}

#[test]
fn gen_corpus_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    let o = harness(&["gen-corpus", "--docs", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let docs = limeade_core::text::load_jsonl(&out).unwrap();
    assert_eq!(docs.len(), 40);
    assert!(docs.iter().all(|d| !d.title.is_empty() && !d.abstract_text.is_empty()));
}

#[test]
fn bad_input_fails_cleanly() {
    let o = harness(&["image-study", "--seeds", "1", "--out", "/dev/null"]);
    assert!(!o.status.success());
    let o = harness(&["image-study", "--config", "/nonexistent.json", "--out", "/dev/null"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));
}
