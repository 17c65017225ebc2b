use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use comte::classifier::{hitting_set_bruteforce, BuiltinModel};

const COMTE: &str = env!("CARGO_BIN_EXE_comte");
const STUB: &str = env!("CARGO_BIN_EXE_comte-wire-stub");

fn demo(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/setcover_demo")
        .join(file)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(COMTE).args(args).env_remove("COMTE_SEED").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("JSON error object on stderr");
    err["error"]["code"].as_str().unwrap().to_string()
}

fn demo_explain(extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = [
        "explain",
        "--train",
        &demo("train.ndjson"),
        "--test",
        &demo("test.ndjson"),
        "--target-class",
        "1",
        "--classifier",
        &format!("builtin:{}", demo("model.json")),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn demo_explanation_has_minimum_hitting_set_size() {
    let model: BuiltinModel = serde_json::from_str(&std::fs::read_to_string(demo("model.json")).unwrap()).unwrap();
    let BuiltinModel::SetCover(forest) = model else { panic!("demo model is a set-cover forest") };
    let optimum = hitting_set_bruteforce(&forest).unwrap();
    for method in ["greedy", "hillclimb"] {
        let args = demo_explain(&["--sample", "t0", "--tau", "1", "--method", method]);
        let out = ok_json(&as_strs(&args));
        let mask: Vec<u64> = serde_json::from_value(out["explanation"]["mask"].clone()).unwrap();
        assert_eq!(mask.iter().sum::<u64>() as usize, optimum.len(), "{method}");
        assert_eq!(out["explanation"]["achieved_probability"], json!(1.0));
    }
}

#[test]
fn sample_already_at_target_gives_empty_explanation() {
    let args = demo_explain(&["--sample", "t1"]);
    let out = ok_json(&as_strs(&args));
    assert_eq!(out["explanation"]["substituted_metrics"], json!([]));
    assert_eq!(out["loss"], json!(0.0));
}

#[test]
fn missing_distractor_is_a_coded_error() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.ndjson");
    // The only "1" sample is misclassified by the forest, so no distractor exists.
    std::fs::write(
        &train,
        concat!(
            r#"{"sample_id":"a","label":"1","metrics":{"u0":[0.0],"u1":[0.0]}}"#,
            "\n",
            r#"{"sample_id":"b","label":"0","metrics":{"u0":[1.0],"u1":[0.0]}}"#,
            "\n"
        ),
    )
    .unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"kind":"set_cover","universe_size":2,"sets":[[1]]}"#).unwrap();
    let out = run(&[
        "explain",
        "--train",
        train.to_str().unwrap(),
        "--sample",
        "b",
        "--target-class",
        "1",
        "--classifier",
        &format!("builtin:{}", model.display()),
    ]);
    assert_eq!(error_code(&out), "no-distractor");
}

#[test]
fn usage_and_input_errors_are_machine_readable() {
    assert_eq!(error_code(&run(&["explain"])), "usage");
    let args = demo_explain(&["--sample", "nope"]);
    assert_eq!(error_code(&run(&as_strs(&args))), "missing-sample");
    let args = demo_explain(&["--sample", "t0", "--tau", "1.5"]);
    assert_eq!(error_code(&run(&as_strs(&args))), "invalid-config");
    let out = run(&["normalize", "--train", "/nonexistent/train.ndjson", "--out", "/tmp/x.json"]);
    assert_eq!(error_code(&out), "io");
}

#[test]
fn seed_comes_from_the_environment() {
    let base = demo_explain(&["--sample", "t2", "--method", "hillclimb", "--max-iters", "0", "--distractors", "1"]);
    let with_flag = {
        let mut a = base.clone();
        a.extend(["--seed".to_string(), "7".to_string()]);
        run(&as_strs(&a))
    };
    let with_env = Command::new(COMTE).args(&base).env("COMTE_SEED", "7").output().unwrap();
    assert!(with_flag.status.success() && with_env.status.success());
    assert_eq!(with_flag.stdout, with_env.stdout);
}

#[test]
fn explain_is_byte_identical_across_runs() {
    for method in ["greedy", "hillclimb"] {
        let args = demo_explain(&["--sample", "t2", "--method", method, "--seed", "5"]);
        let a = run(&as_strs(&args));
        let b = run(&as_strs(&args));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn external_classifier_over_exec() {
    let args = demo_explain(&["--sample", "t0", "--tau", "1"]);
    let builtin = run(&as_strs(&args));
    let mut exec_args = args.clone();
    let pos = exec_args.iter().position(|a| a == "--classifier").unwrap();
    exec_args[pos + 1] = format!("exec:'{STUB}' builtin '{}'", demo("model.json"));
    let exec = run(&as_strs(&exec_args));
    assert!(exec.status.success(), "{}", String::from_utf8_lossy(&exec.stderr));
    assert_eq!(builtin.stdout, exec.stdout);
}

fn tmp(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Generates a small two-class dataset and trains a logistic model on it.
fn logistic_workspace(dir: &Path) -> (String, String, String) {
    let spec = json!({
        "num_metrics": 6,
        "length": 8,
        "classes": ["ok", "bad"],
        "signals": [
            {"metric": 1, "class": "bad", "signal": {"kind": "level_shift", "amount": 1.0}},
            {"metric": 1, "class": "ok", "signal": {"kind": "level_shift", "amount": -1.0}},
        ],
        "noise_scale": 0.1,
        "num_samples": 40,
        "seed": 1
    });
    let spec_path = tmp(dir, "spec.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    let train = tmp(dir, "train.ndjson");
    let manifest = tmp(dir, "manifest.json");
    let out = run(&[
        "generate",
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        train.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let params = tmp(dir, "params.json");
    let out = run(&["normalize", "--train", train.to_str().unwrap(), "--out", params.to_str().unwrap()]);
    assert!(out.status.success());
    let model = tmp(dir, "model.json");
    let summary = ok_json(&[
        "train-logistic",
        "--train",
        train.to_str().unwrap(),
        "--params",
        params.to_str().unwrap(),
        "--l1",
        "0.05",
        "--positive-class",
        "bad",
        "--out",
        model.to_str().unwrap(),
    ]);
    let nonzero = summary["nonzero_features"].as_u64().unwrap();
    assert!(nonzero >= 1, "{summary}");
    // Without a bias term, near-constant normalized metrics may also be used.
    assert!(summary["used_metrics"].as_array().unwrap().contains(&json!("m1")), "{summary}");
    (
        train.display().to_string(),
        params.display().to_string(),
        model.display().to_string(),
    )
}

#[test]
fn evaluation_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (train, params, model) = logistic_workspace(dir.path());
    let classifier = format!("builtin:{model}");
    let explanation = tmp(dir.path(), "explanation.json");
    let out = run(&[
        "explain",
        "--train",
        &train,
        "--params",
        &params,
        "--classifier",
        &classifier,
        "--sample",
        "s00",
        "--target-class",
        "bad",
        "--out",
        explanation.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let e = explanation.to_str().unwrap();

    let faith = ok_json(&["evaluate", "faithfulness", "--explanation", e, "--model", &model]);
    assert_eq!(faith["precision"], json!(1.0));
    let explained = faith["explanation_metrics"].as_array().unwrap().len();
    assert!(faith["explanation_metrics"].as_array().unwrap().contains(&json!("m1")), "{faith}");
    let size = ok_json(&["evaluate", "comprehensibility", "--explanation", e]);
    assert_eq!(size["comprehensibility"], json!(explained));

    let common = ["--train", &train, "--params", &params, "--classifier", &classifier];
    let mut args = vec!["evaluate", "robustness", "--sample", "s00", "--target-class", "bad", "--k", "5"];
    args.extend(common);
    let robust = ok_json(&args);
    assert_eq!(robust["neighbor_count"], json!(5));
    assert!(robust["lipschitz"].as_f64().unwrap() >= 0.0);
    args.push("--random-baseline");
    assert!(ok_json(&args)["lipschitz"].as_f64().is_some());

    let mut args = vec![
        "evaluate",
        "generalizability",
        "--explanation",
        e,
        "--true-class",
        "ok",
        "--predicted-class",
        "ok",
    ];
    args.extend(common);
    let general = ok_json(&args);
    let ratio = general["ratio"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ratio));
    assert_eq!(general["cohort_size"], json!(20));

    let csv = tmp(dir.path(), "plot.csv");
    let out = run(&["plot-data", "--explanation", e, "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric,timestep,test_value,distractor_value"));
    assert_eq!(lines.count(), 8 * explained);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _, _) = logistic_workspace(dir.path());
    let first = std::fs::read(&train).unwrap();
    let again = tempfile::tempdir().unwrap();
    let (train2, _, _) = logistic_workspace(again.path());
    assert_eq!(first, std::fs::read(train2).unwrap());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["signal_metrics"], json!([1]));
}
