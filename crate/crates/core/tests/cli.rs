use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdvoice::boost::{train_xgb, BoostConfig};
use pdvoice::data::{save_dataset, synthetic::replicated_voice_like};
use pdvoice::eval::PipelineConfig;
use pdvoice::select::apply_mask;
use pdvoice::voting::TrainedEnsemble;
use tempfile::TempDir;

fn pdvoice(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdvoice"))
        .args(args)
        .current_dir(dir)
        .env_remove("PDVOICE_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&replicated_voice_like(7), dir.path().join("data.csv"), None).unwrap();
    dir
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn select_reports_count_and_writes_both_files() {
    let ws = workspace();
    let o = pdvoice(&["select", "--data", "data.csv", "--out", "out"], ws.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("selected 30 of 45"), "{}", stdout(&o));
    assert!(read(ws.path().join("out/selection.json")).contains("\"provenance\""));
    assert!(read(ws.path().join("out/correlations.csv")).starts_with("# provenance: "));
}

#[test]
fn threshold_above_one_selects_nothing_and_succeeds() {
    let ws = workspace();
    let o = pdvoice(&["select", "--data", "data.csv", "--threshold", "1.01"], ws.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("selected 0 of 45"));
}

#[test]
fn missing_data_file_is_an_input_error() {
    let ws = workspace();
    let o = pdvoice(&["select", "--data", "nope.csv", "--out", "out"], ws.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
    assert!(!ws.path().join("out").exists());
}

#[test]
fn bad_flags_and_unknown_config_keys_exit_2() {
    let ws = workspace();
    assert_eq!(pdvoice(&["cv", "--folds", "many"], ws.path()).status.code(), Some(2));
    assert_eq!(pdvoice(&["cv", "--data", "data.csv", "--folds", "1"], ws.path()).status.code(), Some(2));
    fs::write(ws.path().join("bad.json"), r#"{"data": "data.csv", "extra": 1}"#).unwrap();
    let o = pdvoice(&["select", "--config", "bad.json"], ws.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn config_comes_from_environment_when_no_flag() {
    let ws = workspace();
    let mut cfg = pdvoice::app::RunConfig {
        data: PathBuf::from("data.csv"),
        ..Default::default()
    };
    cfg.selection.threshold = 1.01;
    fs::write(ws.path().join("env.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pdvoice"))
        .arg("select")
        .current_dir(ws.path())
        .env("PDVOICE_CONFIG", "env.json")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("selected 0 of 45"));
    // a flag still wins over the file
    let o = Command::new(env!("CARGO_BIN_EXE_pdvoice"))
        .args(["select", "--threshold", "0.47"])
        .current_dir(ws.path())
        .env("PDVOICE_CONFIG", "env.json")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("selected 30 of 45"));
}

#[test]
fn report_needs_a_cv_run() {
    let ws = workspace();
    fs::create_dir(ws.path().join("empty")).unwrap();
    let o = pdvoice(&["report", "--out", "empty"], ws.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cv_report.json"));
}

#[test]
fn explain_without_model_is_missing_prerequisite() {
    let ws = workspace();
    let o = pdvoice(&["explain", "--data", "data.csv", "--out", "out"], ws.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn full_pipeline_and_report_table() {
    let ws = workspace();
    let data_before = fs::read(ws.path().join("data.csv")).unwrap();
    for cmd in ["cv", "train", "explain", "report"] {
        let o = pdvoice(&[cmd, "--data", "data.csv", "--out", "out", "--seed", "1"], ws.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        if cmd == "cv" {
            assert!(stdout(&o).contains("vs reference 85.42%"));
        }
    }
    let out = ws.path().join("out");
    let report = read(out.join("report.md"));
    for model in ["XGB", "LGBM", "GBDT", "Bagging", "Voting"] {
        let row = report
            .lines()
            .find(|l| l.starts_with(&format!("| {model} |")))
            .unwrap_or_else(|| panic!("no row for {model}"));
        assert_eq!(row.matches('|').count(), 8, "{row}");
    }
    assert!(report.contains("| Model | Accuracy | Precision | Sensitivity | Specificity | F1 | AUC |"));
    let first = read(out.join("report.md"));
    assert_eq!(pdvoice(&["report", "--out", "out"], ws.path()).status.code(), Some(0));
    assert_eq!(read(out.join("report.md")), first);

    let ranking: serde_json::Value = serde_json::from_str(&read(out.join("shap_ranking.json"))).unwrap();
    assert_eq!(ranking["ranking"]["entries"].as_array().unwrap().len(), 30);
    assert!(ranking["local_accuracy_error"].as_f64().unwrap() <= 1e-9);
    let svg = read(out.join("shap_ranking.svg"));
    assert!(svg.starts_with("<svg") && svg.contains("<metadata>"));
    for f in ["predictions.csv", "roc.csv", "folds/fold3/model.json", "folds/fold0/models/bagging.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    // every output carries the data hash; the input is untouched
    let digest = pdvoice::app::config::sha256_hex(&data_before);
    for f in ["cv_report.json", "predictions.csv", "model.json", "models/xgb.json", "shap_phi.csv", "shap_ranking.svg", "report.md"] {
        assert!(read(out.join(f)).contains(&digest), "{f}");
    }
    assert_eq!(fs::read(ws.path().join("data.csv")).unwrap(), data_before);
    assert!(!out.join(".staging-cv").exists());

    // a fold model explains too
    let o = pdvoice(
        &["explain", "--data", "data.csv", "--out", "fold_shap", "--model", "out/folds/fold1/model.json"],
        ws.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn model_from_another_mask_is_rejected() {
    let ws = workspace();
    assert_eq!(pdvoice(&["train", "--data", "data.csv", "--out", "out"], ws.path()).status.code(), Some(0));
    let o = pdvoice(
        &["explain", "--data", "data.csv", "--out", "out", "--threshold", "0.6"],
        ws.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model expects 30 features"), "{}", stderr(&o));
    assert!(!ws.path().join("out/shap_phi.csv").exists());
}

#[test]
fn renamed_features_are_a_schema_mismatch() {
    let ws = workspace();
    assert_eq!(pdvoice(&["train", "--data", "data.csv", "--out", "out"], ws.path()).status.code(), Some(0));
    let member = ws.path().join("out/models/gbdt.json");
    let mut v: serde_json::Value = serde_json::from_str(&read(&member)).unwrap();
    v["feature_names"][0] = "Renamed".into();
    fs::write(&member, v.to_string()).unwrap();
    let o = pdvoice(&["explain", "--data", "data.csv", "--out", "out", "--model", "out/models/gbdt.json"], ws.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("feature names differ"), "{}", stderr(&o));
}

#[test]
fn single_leaf_member_gives_zero_attributions() {
    let ws = workspace();
    let ds = replicated_voice_like(7);
    let cfg = PipelineConfig::default();
    let reduced = apply_mask(&ds, &cfg.mask(&ds, None).unwrap()).unwrap();
    let y: Vec<f64> = reduced.labels().iter().map(|&l| f64::from(l)).collect();
    let boost = BoostConfig {
        n_trees: 3,
        gamma: 1e9,
        ..BoostConfig::xgb()
    };
    let mut member = TrainedEnsemble::Boosted(train_xgb(&reduced.feature_matrix(), &y, &boost).unwrap());
    assert!(member.trees().iter().all(|t| t.n_leaves() == 1));
    member.set_feature_names(reduced.feature_names());
    fs::write(ws.path().join("stump.json"), serde_json::to_string(&member).unwrap()).unwrap();

    let o = pdvoice(&["explain", "--data", "data.csv", "--out", "out", "--model", "stump.json"], ws.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let phi = read(ws.path().join("out/shap_phi.csv"));
    let mut rows = 0;
    for line in phi.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1..cells.len() - 2].iter().all(|&p| p == 0.0));
        rows += 1;
    }
    assert_eq!(rows, 240);
}

#[test]
fn cv_is_byte_identical_across_runs() {
    let ws = workspace();
    let run = || {
        let _ = fs::remove_dir_all(ws.path().join("out"));
        let o = pdvoice(&["cv", "--data", "data.csv", "--out", "out", "--grouping", "by-row"], ws.path());
        assert_eq!(o.status.code(), Some(0));
        (fs::read(ws.path().join("out/cv_report.json")).unwrap(), fs::read(ws.path().join("out/predictions.csv")).unwrap())
    };
    assert_eq!(run(), run());
}
