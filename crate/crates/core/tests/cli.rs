mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bibmap"));
    cmd.env_remove("BIBMAP_CONFIG");
    cmd
}

fn corpus_args(out: &Path) -> Vec<String> {
    let c = common::corpus();
    let p = |name: &str| c.join(name).display().to_string();
    vec![
        "--meta-csv".into(),
        p("meta.csv"),
        "--oa-works".into(),
        p("works.jsonl"),
        "--oa-sources".into(),
        p("sources.jsonl"),
        "--provenance".into(),
        p("provenance.jsonl"),
        "--prefixes".into(),
        p("prefixes.txt"),
        "--indicators".into(),
        p("indicators.txt"),
        "--out".into(),
        out.display().to_string(),
    ]
}

fn run(args: &[&str], extra: &[String]) -> Output {
    bin().args(args).args(extra).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn full_run(dir: &Path) -> PathBuf {
    let out = dir.join("out");
    let res = run(&["run-all"], &corpus_args(&out));
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    out
}

#[test]
fn run_all_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = full_run(dir.path());
    for f in [
        "one_to_one.csv",
        "multi_mapped.csv",
        "non_mapped.csv",
        "stats.json",
        "verdicts.csv",
        "provenance_matrix.csv",
        "summary.json",
        "report.txt",
        "run_manifest.json",
        "defects_index.csv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stats"]["multi_mapped"], 8);
    assert_eq!(summary["stats"]["inverted_multi_omids"], 2);

    let report = run(&["report", "--format", "json"], &corpus_args(&out));
    assert_eq!(code(&report), 0, "{}", stderr(&report));
    let printed: Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(printed["stats"], summary["stats"]);

    let text = run(&["report"], &corpus_args(&out));
    assert!(String::from_utf8_lossy(&text.stdout).contains("multi-mapped: 8"));
}

#[test]
fn missing_works_file_is_a_config_error_and_leaves_no_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut args = corpus_args(&out);
    let at = args.iter().position(|a| a == "--oa-works").unwrap();
    args[at + 1] = dir.path().join("nope.jsonl").display().to_string();
    let res = run(&["build-index"], &args);
    assert_eq!(code(&res), 2, "{}", stderr(&res));
    assert!(!out.join("index").exists());
}

#[test]
fn existing_index_requires_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let args = corpus_args(&out);
    assert_eq!(code(&run(&["build-index"], &args)), 0);
    let again = run(&["build-index"], &args);
    assert_eq!(code(&again), 2);
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    assert_eq!(code(&run(&["build-index", "--force"], &args)), 0);
}

#[test]
fn classify_before_map_is_a_prerequisite_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let args = corpus_args(&out);
    assert_eq!(code(&run(&["build-index"], &args)), 0);
    let res = run(&["classify"], &args);
    assert_eq!(code(&res), 5, "{}", stderr(&res));
    assert!(stderr(&res).contains("map"));
}

#[test]
fn map_without_index_is_a_prerequisite_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["map"], &corpus_args(&dir.path().join("out")));
    assert_eq!(code(&res), 5, "{}", stderr(&res));
}

#[test]
fn report_on_partial_outputs_marks_absent_phases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut args = corpus_args(&out);
    args.extend(["--phase".into(), "build-index,map".into()]);
    assert_eq!(code(&run(&["run-all"], &args)), 0);
    let res = run(&["report"], &corpus_args(&out));
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("Absent phases: classify, provenance"), "{text}");
}

#[test]
fn report_detects_tampered_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = full_run(dir.path());
    let path = out.join("multi_mapped.csv");
    let mut body = std::fs::read_to_string(&path).unwrap();
    body.push_str("br/0999,W1 W2,journal article\n");
    std::fs::write(&path, body).unwrap();
    let res = run(&["report"], &corpus_args(&out));
    assert_eq!(code(&res), 4, "{}", stderr(&res));
}

#[test]
fn verify_sample_with_fixture_resolver() {
    let dir = tempfile::tempdir().unwrap();
    let out = full_run(dir.path());
    let fixture = common::corpus().join("resolver.json").display().to_string();
    let mut args = corpus_args(&out);
    args.extend([
        "--n".into(),
        "3".into(),
        "--seed".into(),
        "7".into(),
        "--resolver".into(),
        "fixture".into(),
        "--resolver-fixture".into(),
        fixture,
    ]);
    let res = run(&["verify-sample"], &args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let audit: Value = serde_json::from_slice(&std::fs::read(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["entries"].as_array().unwrap().len(), 3);
    assert_eq!(audit["complete"], true);
    let first = std::fs::read(out.join("audit.json")).unwrap();
    assert_eq!(code(&run(&["verify-sample"], &args)), 0);
    assert_eq!(std::fs::read(out.join("audit.json")).unwrap(), first, "same seed, same sample");

    let zero = run(&["verify-sample", "--n", "0"], &corpus_args(&out));
    assert_eq!(code(&zero), 0);
    let audit: Value = serde_json::from_slice(&std::fs::read(out.join("audit.json")).unwrap()).unwrap();
    assert!(audit["entries"].as_array().unwrap().is_empty());

    let offline = run(&["verify-sample", "--resolver", "offline"], &corpus_args(&out));
    assert_eq!(code(&offline), 0, "{}", stderr(&offline));
    let audit: Value = serde_json::from_slice(&std::fs::read(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["complete"], false);

    let unknown = run(&["verify-sample", "--resolver", "carrier-pigeon"], &corpus_args(&out));
    assert_eq!(code(&unknown), 2);
}

#[test]
fn config_file_via_env_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let c = common::corpus();
    let config = serde_json::json!({
        "meta_csv": [c.join("meta.csv")],
        "oa_works": [c.join("works.jsonl")],
        "oa_sources": [c.join("sources.jsonl")],
        "prefixes": c.join("prefixes.txt"),
        "indicators": c.join("indicators.txt"),
        "out": "from-config",
        "phases": ["build-index", "map"],
    });
    let path = dir.path().join("bibmap.json");
    std::fs::write(&path, serde_json::to_vec(&config).unwrap()).unwrap();

    let res = bin().arg("run-all").env("BIBMAP_CONFIG", &path).output().unwrap();
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(dir.path().join("from-config/multi_mapped.csv").is_file());
    assert!(!dir.path().join("from-config/verdicts.csv").exists());

    let flagged = dir.path().join("from-flag");
    let res = bin()
        .args(["run-all", "--out"])
        .arg(&flagged)
        .env("BIBMAP_CONFIG", &path)
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(flagged.join("multi_mapped.csv").is_file());

    std::fs::write(&path, r#"{"no_such_key": 1}"#).unwrap();
    let res = bin().arg("run-all").env("BIBMAP_CONFIG", &path).output().unwrap();
    assert_eq!(code(&res), 2);
}

#[test]
fn dump_index_lists_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let args = corpus_args(&out);
    assert_eq!(code(&run(&["build-index"], &args)), 0);
    let dump = dir.path().join("dump.csv");
    let mut args = args.clone();
    args.extend(["--output".into(), dump.display().to_string()]);
    let res = run(&["dump-index"], &args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let body = std::fs::read_to_string(&dump).unwrap();
    assert!(body.starts_with("scheme,value,openalex_id\n"));
    assert!(body.contains("issn,0378-5955,S4210187171"), "{body}");
}
