use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tbl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbl"))
        .args(args)
        .current_dir(dir)
        .env_remove("TBL_THREADS")
        .output()
        .expect("spawn tbl")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| fs::write(dir.path().join(name), text).unwrap();
    write("k4.txt", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    write("k5.txt", "k=5\n0 1\n0 2\n0 3\n0 4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n");
    write("star5.txt", "# star\n0 1\n0 2\n0 3\n0 4\n");
    write("p4.txt", "0 1\n1 2\n2 3\n");
    write("split.txt", "0 1\n2 3\n");
    write("bad.txt", "0 1\n0 x\n");
    write("c5.txt", "0 1\n1 2\n2 3\n3 4\n4 0\n");
    write("x.csv", "a,b,c,d,e\n1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n0,0,0,1,-1\n");
    write("x_small.csv", "1,0\n0,1\n");
    write(
        "zero.json",
        r#"{"L":2,"t":1,"dims":[4,1,1],"activation":"relu","betas":[1,1],"weights":[[0,0,0,0],[0]]}"#,
    );
    write(
        "beta0.json",
        r#"{"L":2,"t":1,"dims":[4,1,1],"activation":"relu","betas":[0,0],"weights":[[0,0,0,0],[0]]}"#,
    );
    write(
        "half.json",
        r#"{"L":2,"t":1,"dims":[4,1,1],"activation":"tanh","betas":[1,1],"weights":[[0.5,0,0,0],[1]]}"#,
    );
    dir
}

#[test]
fn metric_reports() {
    let dir = fixtures();
    let k4 = report(&tbl(dir.path(), &["metric", "k4.txt"]));
    assert_eq!(k4["k"], 4);
    assert_eq!(k4["diam"], 1.0);
    assert_eq!(k4["deg_min"], 3);
    assert_eq!(k4["schema_version"], 1);
    assert_eq!(k4["config"]["graph"], "k4.txt");
    let split = report(&tbl(dir.path(), &["metric", "split.txt"]));
    assert_eq!(split["diam"], "inf");
    assert!(split["warning"].is_string());
    assert_eq!(tbl(dir.path(), &["metric", "bad.txt"]).status.code(), Some(2));
    assert_eq!(tbl(dir.path(), &["metric", "missing.txt"]).status.code(), Some(2));
}

#[test]
fn doubling_reports() {
    let dir = fixtures();
    let k5 = report(&tbl(dir.path(), &["doubling", "k5.txt"]));
    assert_eq!(k5["exact_m"], 5);
    assert_eq!(k5["bound_degree"], 5);
    let star = report(&tbl(dir.path(), &["doubling", "star5.txt"]));
    assert_eq!(star["exact_m"], 5);
    assert_eq!(star["bound_spectral"], 81.0);
    let p4 = report(&tbl(dir.path(), &["doubling", "p4.txt"]));
    assert!(p4["bound_degree"].is_null());
    assert!(p4["bounds_note"].as_str().unwrap().contains("inapplicable"));
    assert_eq!(tbl(dir.path(), &["doubling", "split.txt"]).status.code(), Some(3));
    assert_eq!(
        tbl(dir.path(), &["doubling", "k5.txt", "--exact-limit", "65"]).status.code(),
        Some(3)
    );
}

#[test]
fn concentration_csv() {
    let dir = fixtures();
    let args = ["concentration", "--builtin", "star:10", "--n-list", "4,16,64,256", "--trials", "200", "--seed", "3"];
    let out = tbl(dir.path(), &args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema_version=1 config="));
    assert_eq!(lines.next().unwrap(), "n,trials,mean,std,quantile,bound_mean,bound_dev,pass");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    assert_eq!(tbl(dir.path(), &args).stdout, out.stdout);
    let zero = tbl(dir.path(), &["concentration", "--builtin", "star:10", "--trials", "0"]);
    assert_eq!(zero.status.code(), Some(2));
    let neither = tbl(dir.path(), &["concentration", "--trials", "5"]);
    assert_eq!(neither.status.code(), Some(2));
    let unknown = tbl(dir.path(), &["concentration", "--builtin", "wheel:5"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn output_is_written_atomically_to_path() {
    let dir = fixtures();
    let out = tbl(dir.path(), &["metric", "k4.txt", "-o", "k4.json"]);
    assert!(out.status.success() && out.stdout.is_empty());
    let written: Value = serde_json::from_slice(&fs::read(dir.path().join("k4.json")).unwrap()).unwrap();
    assert_eq!(written["k"], 4);
    let leftovers = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn bound_modes() {
    let dir = fixtures();
    let base = ["bound", "--graph", "c5.txt", "--features", "x.csv", "--n", "16"];
    let with = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        tbl(dir.path(), &args)
    };
    let c31 = report(&with(&["--gcn", "zero.json", "--mode", "c31", "--diam-eout", "1"]));
    let b = c31["report"]["lipschitz"].as_f64().unwrap();
    assert!((b - 2.0 * (1.0 + 2f64.sqrt()).powi(2)).abs() < 1e-12);
    assert!((b - 11.657).abs() < 1e-3);
    assert_eq!(c31["report"]["branch_4r1"], 4.0);
    let t32 = report(&with(&["--gcn", "beta0.json", "--mode", "t32"]));
    assert_eq!(t32["report"]["bound"], 0.0);
    assert_eq!(t32["report"]["confidence"], 0.8);
    let bad_delta = with(&["--gcn", "half.json", "--mode", "t32", "--delta", "0.6"]);
    assert_eq!(bad_delta.status.code(), Some(3));
    let t31 = report(&with(&["--gcn", "half.json", "--mode", "t31", "--lipschitz", "3"]));
    assert_eq!(t31["report"]["lipschitz"], 3.0);
    assert_eq!(with(&["--gcn", "half.json", "--mode", "t31"]).status.code(), Some(2));
    let c32 = report(&with(&["--gcn", "half.json", "--mode", "c32"]));
    assert!(c32["report"]["variants"].is_array());
    let shape = tbl(
        dir.path(),
        &["bound", "--graph", "c5.txt", "--features", "x_small.csv", "--gcn", "half.json", "--n", "16", "--mode", "c31"],
    );
    assert_eq!(shape.status.code(), Some(3));
    assert_eq!(with(&["--gcn", "nope.json", "--mode", "c31"]).status.code(), Some(2));
    assert_eq!(with(&["--gcn", "half.json", "--mode", "c31", "--loss", "pinball"]).status.code(), Some(2));
}

#[test]
fn validate_configs() {
    let dir = fixtures();
    let write = |name: &str, text: &str| fs::write(dir.path().join(name), text).unwrap();
    write(
        "teacher_only.json",
        r#"{"kind": "coverage", "graph": {"file": "c5.txt"}, "features": {"file": "x.csv"},
            "teacher": {"file": "half.json"}, "n": 8, "delta": 0.1, "trials": 50, "mode": "c31",
            "gaps_csv": "gaps.csv"}"#,
    );
    let v = report(&tbl(dir.path(), &["validate", "--config", "teacher_only.json"]));
    assert_eq!(v["validation"]["coverage"], 1.0);
    assert_eq!(v["validation"]["pass"], true);
    assert_eq!(v["config"]["kind"], "coverage");
    let gaps = fs::read_to_string(dir.path().join("gaps.csv")).unwrap();
    assert_eq!(gaps.lines().filter(|l| !l.starts_with('#')).count(), 51);
    write(
        "missing.json",
        r#"{"kind": "coverage", "graph": {"file": "c5.txt"}, "features": {"file": "x.csv"},
            "teacher": {"file": "absent.json"}, "n": 8, "delta": 0.1, "trials": 5, "mode": "c31"}"#,
    );
    assert_eq!(tbl(dir.path(), &["validate", "--config", "missing.json"]).status.code(), Some(2));
    write("typo.json", r#"{"kind": "coverage", "graph": {"file": "c5.txt"}, "trails": 5}"#);
    assert_eq!(tbl(dir.path(), &["validate", "--config", "typo.json"]).status.code(), Some(2));
    write(
        "events.json",
        r#"{"kind": "er_events", "k": 120, "c": 3.0, "samples": 10, "seed": 4, "rows_csv": "rows.csv"}"#,
    );
    let e = report(&tbl(dir.path(), &["validate", "--config", "events.json"]));
    assert_eq!(e["samples"], 10);
    assert!(e["freq_diam"].as_f64().unwrap() >= 0.0);
    assert!(dir.path().join("rows.csv").exists());
}

#[test]
fn er_study_and_threads() {
    let dir = fixtures();
    let args = ["er-study", "--k", "300", "--c", "3", "--samples", "8", "--seed", "1"];
    let a = tbl(dir.path(), &args);
    let v = report(&a);
    assert_eq!(v["command"], "er-study");
    assert!(v["bounds"]["p_diam_event"].is_number());
    let capped = Command::new(env!("CARGO_BIN_EXE_tbl"))
        .args(args)
        .current_dir(dir.path())
        .env("TBL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(capped.stdout, a.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_tbl"))
        .args(args)
        .current_dir(dir.path())
        .env("TBL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(tbl(dir.path(), &["er-study", "--k", "300", "--c", "1.5"]).status.code(), Some(3));
}
