use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_cardioforest")).args(args).output().expect("binary runs");
    assert!(out.stdout.is_empty(), "data must not go to stdout");
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &TempDir, name: &str, n: usize) -> PathBuf {
    let p = path(dir, name);
    assert_eq!(run(&["synth", "--n", &n.to_string(), "--prevalence", "0.1546", "--seed", "42", "--out", s(&p)]), 0);
    p
}

#[test]
fn synth_is_deterministic_and_validated() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.csv", 1000);
    let b = synth(&dir, "b.csv", 1000);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let header = text.lines().next().unwrap();
    for col in ["subject_id", "study_id", "qrs_duration", "rr_interval", "wct_label"] {
        assert!(header.split(',').any(|h| h == col), "{col}");
    }
    assert_eq!(run(&["synth", "--n", "10", "--prevalence", "1.5", "--out", s(&path(&dir, "c.csv"))]), 2);
    assert_eq!(run(&["synth", "--prevalence", "0.2"]), 2);
}

#[test]
fn prep_reports_and_preserves_clean_input() {
    let dir = TempDir::new().unwrap();
    let raw = synth(&dir, "raw.csv", 200);
    let clean = path(&dir, "clean.csv");
    let report = path(&dir, "report.json");
    assert_eq!(run(&["prep", "--in", s(&raw), "--out", s(&clean), "--report", s(&report)]), 0);
    assert_eq!(std::fs::read(&raw).unwrap(), std::fs::read(&clean).unwrap());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["duplicates_removed"], 0);
    assert!(r["flagged"].as_object().unwrap().values().all(|v| v == 0));
    assert!(r["imputed"].as_object().unwrap().values().all(|v| v == 0));

    // one duplicated record
    let text = std::fs::read_to_string(&raw).unwrap();
    let second = text.lines().nth(1).unwrap();
    let dup = path(&dir, "dup.csv");
    std::fs::write(&dup, format!("{text}{second}\n")).unwrap();
    assert_eq!(run(&["prep", "--in", s(&dup), "--out", s(&clean), "--report", s(&report)]), 0);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["duplicates_removed"], 1);
    assert_eq!(r["rows_out"], 200);

    let no_qrs: String = text
        .lines()
        .map(|l| l.split(',').enumerate().filter(|&(i, _)| i != 11).map(|(_, c)| c).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    assert!(!no_qrs.lines().next().unwrap().contains("qrs_duration"));
    let bad = path(&dir, "bad.csv");
    std::fs::write(&bad, no_qrs + "\n").unwrap();
    assert_eq!(run(&["prep", "--in", s(&bad), "--out", s(&clean), "--report", s(&report)]), 3);
    assert_eq!(run(&["prep", "--in", s(&path(&dir, "none.csv")), "--out", s(&clean), "--report", s(&report)]), 3);
    assert_eq!(run(&["prep", "--in", s(&raw), "--out", s(&raw), "--report", s(&report)]), 2);
}

#[test]
fn train_predict_explain_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, "d.csv", 400);
    let before = std::fs::read(&data).unwrap();
    for model in ["cardioforest", "xgb", "lgbm", "gbm"] {
        let m = path(&dir, &format!("{model}.json"));
        assert_eq!(
            run(&["train", "--model", model, "--data", s(&data), "--out", s(&m), "--n_estimators", "20", "--threads", "2"]),
            0
        );
        let pred = path(&dir, &format!("{model}.pred.csv"));
        assert_eq!(run(&["predict", "--model", s(&m), "--data", s(&data), "--out", s(&pred)]), 0);
        let text = std::fs::read_to_string(&pred).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_id,probability,label");
        let mut count = 0;
        for l in lines {
            let f: Vec<&str> = l.split(',').collect();
            let p: f64 = f[1].parse().unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(f[2] == "0" || f[2] == "1");
            count += 1;
        }
        assert_eq!(count, 400);

        let shap = path(&dir, &format!("{model}.shap.csv"));
        let summary = path(&dir, &format!("{model}.summary.csv"));
        assert_eq!(
            run(&["explain", "--model", s(&m), "--data", s(&data), "--out", s(&shap), "--summary", s(&summary)]),
            0
        );
        let shap_text = std::fs::read_to_string(&shap).unwrap();
        let space = if model == "cardioforest" { "probability" } else { "margin" };
        assert!(shap_text.starts_with(&format!("# space={space} base_value=")));
        assert_eq!(shap_text.lines().nth(1).unwrap(), "sample_id,feature,shap_value,feature_value");
        let summary_text = std::fs::read_to_string(&summary).unwrap();
        assert_eq!(summary_text.lines().next().unwrap(), "feature,mean_abs_shap,rank");
        assert!(summary_text.lines().nth(1).unwrap().starts_with("qrs_duration,"));
    }
    assert_eq!(std::fs::read(&data).unwrap(), before, "inputs are never modified");
}

#[test]
fn model_errors_exit_four() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, "d.csv", 300);
    let m = path(&dir, "m.json");
    assert_eq!(run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m)]), 0);

    // drop a feature the model needs
    let text = std::fs::read_to_string(&data).unwrap();
    let narrow: String = text
        .lines()
        .map(|l| l.split(',').enumerate().filter(|&(i, _)| i != 2).map(|(_, c)| c).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    let narrow_path = path(&dir, "narrow.csv");
    std::fs::write(&narrow_path, narrow + "\n").unwrap();
    let out = path(&dir, "p.csv");
    assert_eq!(run(&["predict", "--model", s(&m), "--data", s(&narrow_path), "--out", s(&out)]), 4);

    let garbage = path(&dir, "garbage.json");
    std::fs::write(&garbage, "not a model").unwrap();
    assert_eq!(run(&["predict", "--model", s(&garbage), "--data", s(&data), "--out", s(&out)]), 4);

    // single-class training labels
    let mut lines = text.lines();
    let mut neg = vec![lines.next().unwrap().to_owned()];
    neg.extend(lines.filter(|l| l.ends_with(",0")).map(str::to_owned));
    let neg_path = path(&dir, "neg.csv");
    std::fs::write(&neg_path, neg.join("\n") + "\n").unwrap();
    assert_eq!(run(&["train", "--model", "cardioforest", "--data", s(&neg_path), "--out", s(&m)]), 4);
    assert_eq!(run(&["cv", "--models", "gbm", "--data", s(&neg_path), "--out", s(&out)]), 4);
}

#[test]
fn config_files_and_flags() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, "d.csv", 300);
    let m = path(&dir, "m.json");
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, r#"{"random_state": 7, "xgb": {"n_estimators": 4, "gamma": 1.0}}"#).unwrap();
    assert_eq!(
        run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m), "--config", s(&cfg), "--gamma", "0.5"]),
        0
    );
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(doc["params"]["n_estimators"], 4);
    assert_eq!(doc["params"]["gamma"], 0.5);
    assert_eq!(doc["params"]["seed"], 7);
    assert_eq!(doc["trees"].as_array().unwrap().len(), 4);

    std::fs::write(&cfg, r#"{"n_estimators": 4, "not_a_parameter": 1}"#).unwrap();
    assert_eq!(run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m), "--config", s(&cfg)]), 2);
    std::fs::write(&cfg, "{broken").unwrap();
    assert_eq!(run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m), "--config", s(&cfg)]), 2);
    assert_eq!(run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m), "--ccp-alpha", "0.1"]), 2);
    assert_eq!(run(&["train", "--model", "rf", "--data", s(&data), "--out", s(&m)]), 2);
    assert_eq!(run(&["train", "--model", "xgb", "--data", s(&data), "--out", s(&m), "--subsample", "0"]), 2);
    assert_eq!(run(&["cv", "--models", "xgb", "--data", s(&data), "--out", s(&path(&dir, "x.csv")), "--k", "1"]), 2);
}

#[test]
fn derived_features_flow_through_predict() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, "d.csv", 300);
    let m = path(&dir, "m.json");
    assert_eq!(
        run(&["train", "--model", "gbm", "--data", s(&data), "--out", s(&m), "--derived", "--correlation-threshold", "none"]),
        0
    );
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    let names: Vec<&str> = doc["feature_names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(names.contains(&"qrs_rr_ratio") && names.contains(&"hr_bpm"));
    assert_eq!(run(&["predict", "--model", s(&m), "--data", s(&data), "--out", s(&path(&dir, "p.csv"))]), 0);
}

#[test]
fn cv_and_report_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir, "d.csv", 500);
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    let (ja, jb) = (path(&dir, "a.json"), path(&dir, "b.json"));
    let base = ["cv", "--models", "cardioforest,lgbm", "--data", s(&data), "--k", "5", "--n_estimators", "15"];
    let mut args_a = base.to_vec();
    args_a.extend(["--out", s(&a), "--json", s(&ja), "--threads", "1"]);
    let mut args_b = base.to_vec();
    args_b.extend(["--out", s(&b), "--json", s(&jb), "--threads", "3"]);
    assert_eq!(run(&args_a), 0);
    assert_eq!(run(&args_b), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&ja).unwrap(), std::fs::read(&jb).unwrap());
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().all(|l| l.split(',').count() == 10));

    let rep = path(&dir, "rep.csv");
    assert_eq!(run(&["report", "--cv", s(&a), "--metric", "balanced_accuracy", "--out", s(&rep)]), 0);
    let text = std::fs::read_to_string(&rep).unwrap();
    assert_eq!(text.lines().next().unwrap(), "Model,Metric,n,mean,std,cv_percent");
    assert_eq!(text.lines().count(), 3);
    assert_eq!(run(&["report", "--cv", s(&a), "--metric", "nope", "--out", s(&rep)]), 2);
}
