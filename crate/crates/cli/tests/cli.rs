use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use roleprobe_core::interchange::{slot, write_store};
use roleprobe_core::stimgen::{load_stimuli, Condition};
use roleprobe_core::synthetic::{attention_store, role_encoding_store, syntax_onehot_store, StoreShape};
use serde_json::Value;
use tempfile::TempDir;

fn roleprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roleprobe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("structured error on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn gen(dir: &Path, exp: u8, sets: usize) -> PathBuf {
    let path = dir.join(format!("stim{exp}.jsonl"));
    let out = roleprobe(&["gen-stimuli", "--exp", &exp.to_string(), "--sets", &sets.to_string(), "--out", s(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn gen_stimuli_exp2_fifty_sets() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let out = roleprobe(&["gen-stimuli", "--exp", "2", "--sets", "50", "--out-dir", s(&out_dir)]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("stimuli-exp2.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1200);
    let report = read_json(&out_dir.join("gen-stimuli-exp2.json"));
    assert_eq!(report["result"]["n_sentences"], 1200);
    assert_eq!(report["artifact"], "roleprobe");
    assert_eq!(report["config"]["svm_C"], 1.0);
    assert_eq!(report["config"]["bootstrap"]["B"], 5000);
}

#[test]
fn unknown_command_exits_2() {
    let out = roleprobe(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_config_values_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "svm_C = -1\n").unwrap();
    let out = roleprobe(&["report", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config_value");

    fs::write(&cfg, "svm_c = 1\ncolour = \"red\"\n").unwrap();
    let out = roleprobe(&["report", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "config");

    fs::write(&cfg, "alpha = \"small\"\n").unwrap();
    let out = roleprobe(&["report", "--config", s(&cfg)]);
    assert_eq!(error_kind(&out), "config");

    let out = roleprobe(&["report", "--svm-c", "-1"]);
    assert_eq!(error_kind(&out), "config_value");

    let out = roleprobe(&["rsa-exp2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "missing_path");
}

#[test]
fn config_paths_resolve_against_the_config_file() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    let cfg = dir.path().join("cfg").join("run.toml");
    fs::write(&cfg, "out_dir = \"results\"\n[bootstrap]\nB = 300\nseed = 4\n").unwrap();
    let out = roleprobe(&["gen-stimuli", "--exp", "1", "--sets", "3", "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("cfg/results/gen-stimuli-exp1.json"));
    assert_eq!(report["config"]["bootstrap"]["B"], 300);
    assert_eq!(report["result"]["n_sentences"], 15);
}

#[test]
fn exp1_similarity_pipeline() {
    let dir = TempDir::new().unwrap();
    let stim = gen(dir.path(), 1, 12);
    let sets = load_stimuli(&stim).unwrap();
    let shape = StoreShape { num_layers: 2, hidden_size: 16, num_heads: 0 };
    let store_dir = dir.path().join("store");
    write_store(&syntax_onehot_store(&sets, shape, 0.3, 5).unwrap(), &store_dir).unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "rsa-exp1", "--stimuli", s(&stim), "--store", s(&store_dir), "--out-dir", s(&out_dir), "--bootstrap-b", "200",
        "--layers", "2",
    ];
    let out = roleprobe(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("rsa-exp1.json"));
    let layer = &report["result"][0];
    assert_eq!(layer["layer"], 2);
    let contrast = layer["posthoc"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["first"] == Condition::SdYs.as_str() && c["second"] == Condition::SsYd.as_str())
        .unwrap();
    assert_eq!(contrast["directional"]["estimate"], 1.0);
    let inputs = report["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    let per_set = fs::read_to_string(out_dir.join("rsa-exp1-per-set.csv")).unwrap();
    assert_eq!(per_set.lines().next().unwrap(), "layer,set_id,SsYs,SsYd,SdYs,SdYd");
    assert_eq!(per_set.lines().count(), 13);

    let out = roleprobe(&[&args[..], &["--strategy", "mean-pool"]].concat());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "strategy_mismatch");
}

#[test]
fn probe_compare_and_rerun_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let stim = gen(dir.path(), 2, 4);
    let sets = load_stimuli(&stim).unwrap();
    let shape = StoreShape { num_layers: 2, hidden_size: 6, num_heads: 0 };
    let store_dir = dir.path().join("store");
    write_store(&role_encoding_store(&sets, shape, 2, 0, 0.5, 1).unwrap(), &store_dir).unwrap();
    let out_dir = dir.path().join("out");
    let common = ["--stimuli", s(&stim), "--store", s(&store_dir), "--out-dir", s(&out_dir), "--bootstrap-b", "200"];

    let out = roleprobe(&[&["validate-store"][..], &common].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&out_dir.join("validate-store.json"))["result"]["valid"], true);

    let probe_args = [&["probe-hidden", "--orientation-mode", "randomized-check"][..], &common].concat();
    assert!(roleprobe(&probe_args).status.success());
    let report = read_json(&out_dir.join("probe-hidden.json"));
    assert_eq!(report["result"]["canonical"].as_array().unwrap().len(), 2);
    assert_eq!(report["result"]["orientation_gap"].as_array().unwrap().len(), 2);
    let folds = fs::read_to_string(out_dir.join("probe-hidden-folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), 1 + 2 * 2 * 66);

    let folds_csv = out_dir.join("probe-hidden-folds.csv");
    let compare = [
        &["compare", "--folds", s(&folds_csv), "--target", "L2", "--human-accuracy", "0.7", "--participants", "100", "--distance", "3"][..],
        &common,
    ]
    .concat();
    let out = roleprobe(&compare);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cmp = read_json(&out_dir.join("compare.json"));
    assert_eq!(cmp["result"]["human"]["successes"], 70);
    assert!(cmp["result"]["rows"].as_array().unwrap().iter().all(|r| r["feature_distance"] == 3));

    let ambiguous = [&["compare", "--folds", s(&folds_csv), "--human-accuracy", "0.7", "--participants", "100"][..], &common].concat();
    assert_eq!(error_kind(&roleprobe(&ambiguous)), "input");

    assert!(roleprobe(&[&["report"][..], &common].concat()).status.success());
    let index = read_json(&out_dir.join("index.json"));
    let commands: Vec<&str> = index["result"].as_array().unwrap().iter().map(|e| e["command"].as_str().unwrap()).collect();
    assert_eq!(commands, ["compare", "probe-hidden", "validate-store"]);

    let snapshot = |names: &[&str]| names.iter().map(|n| fs::read(out_dir.join(n)).unwrap()).collect::<Vec<_>>();
    let names = ["probe-hidden.json", "probe-hidden-folds.csv", "probe-hidden-summary.csv", "compare.json"];
    let before = snapshot(&names);
    let stim_before = fs::read(&stim).unwrap();
    assert!(roleprobe(&probe_args).status.success());
    assert!(roleprobe(&compare).status.success());
    assert_eq!(before, snapshot(&names));
    assert_eq!(stim_before, fs::read(&stim).unwrap());
}

#[test]
fn attention_probe_and_head_characterization() {
    let dir = TempDir::new().unwrap();
    let stim = gen(dir.path(), 2, 6);
    let sets = load_stimuli(&stim).unwrap();
    let shape = StoreShape { num_layers: 1, hidden_size: 4, num_heads: 2 };
    let store = attention_store(&sets, shape, 3, |row, head| {
        let mut w = [0.5f32; 10];
        if head == 2 {
            w[slot::VERB_TO_AGENT] = 0.9;
            w[slot::VERB_TO_PATIENT] = 0.1;
        }
        if row.sentence.role_version.index() == 1 {
            w[2] = 0.3;
        }
        w
    })
    .unwrap();
    let store_dir = dir.path().join("store");
    write_store(&store, &store_dir).unwrap();
    let out_dir = dir.path().join("out");
    let common = ["--stimuli", s(&stim), "--store", s(&store_dir), "--out-dir", s(&out_dir), "--bootstrap-b", "200"];

    let out = roleprobe(&[&["probe-attention", "--heads", "2"][..], &common].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("probe-attention.json"));
    assert_eq!(report["result"]["family_size"], 2);
    assert_eq!(report["result"]["canonical"][0]["target"]["head"], 2);

    let out = roleprobe(&[&["characterize-head", "--layer", "1", "--head", "2"][..], &common].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let head = read_json(&out_dir.join("characterize-head-L1H2.json"));
    assert_eq!(head["result"]["contrasts"][0]["agreeing_structures"], 12);

    let out = roleprobe(&[&["characterize-head", "--layer", "1", "--head", "3"][..], &common].concat());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "analysis");
}

#[test]
fn validate_store_reports_corruption() {
    let dir = TempDir::new().unwrap();
    let stim = gen(dir.path(), 2, 2);
    let sets = load_stimuli(&stim).unwrap();
    let shape = StoreShape { num_layers: 1, hidden_size: 4, num_heads: 0 };
    let store_dir = dir.path().join("store");
    write_store(&role_encoding_store(&sets, shape, 1, 0, 0.5, 1).unwrap(), &store_dir).unwrap();
    let hidden = fs::read_dir(&store_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().contains("hidden"))
        .unwrap();
    let hidden = if hidden.is_dir() { fs::read_dir(&hidden).unwrap().next().unwrap().unwrap().path() } else { hidden };
    let mut bytes = fs::read(&hidden).unwrap();
    bytes.truncate(bytes.len() - 4);
    fs::write(&hidden, bytes).unwrap();
    let out = roleprobe(&["validate-store", "--store", s(&store_dir)]);
    assert_eq!(out.status.code(), Some(1));
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed["valid"], false);
    assert_eq!(error_kind(&out), "invalid_store");
}

fn write_ratings(path: &Path, rows: &[(String, &str, String, f64, bool)]) {
    let mut text = String::from("participant_id,set_id,condition,first_id,second_id,rating,filler\n");
    for (p, set, cond, rating, filler) in rows {
        text.push_str(&format!("{p},{set},{cond},a,b,{rating},{filler}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn human_commands() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let exp1 = dir.path().join("h1.csv");
    let mut rows = Vec::new();
    for p in 0..6 {
        for (k, c) in Condition::VARIANTS.iter().enumerate() {
            for rep in 0..2 {
                let rating = 20.0 + 15.0 * k as f64 + rep as f64 + p as f64;
                rows.push((format!("p{p}"), "e1-001", c.as_str().to_string(), rating, false));
            }
        }
        rows.push((format!("p{p}"), "f", "filler".to_string(), 50.0, true));
    }
    write_ratings(&exp1, &rows);
    let out = roleprobe(&["human-exp1", "--human-csv", s(&exp1), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("human-exp1.json"));
    assert_eq!(report["result"]["levels"].as_array().unwrap().len(), 5);
    let out = roleprobe(&["human-exp1", "--no-filler", "--human-csv", s(&exp1), "--out-dir", s(&out_dir)]);
    assert!(out.status.success());
    assert_eq!(read_json(&out_dir.join("human-exp1.json"))["result"]["levels"].as_array().unwrap().len(), 4);

    let exp2 = dir.path().join("h2.csv");
    let mut rows = Vec::new();
    for p in 0..10 {
        for d in 0..=3 {
            rows.push((format!("p{p}"), "e2-001", format!("same-{d}"), 70.0 + d as f64, false));
            rows.push((format!("p{p}"), "e2-001", format!("opposite-{d}"), 40.0 - d as f64, false));
        }
    }
    write_ratings(&exp2, &rows);
    let out = roleprobe(&["human-exp2", "--human-csv", s(&exp2), "--out-dir", s(&out_dir), "--bootstrap-b", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("human-exp2.json"));
    assert_eq!(report["result"]["implicit_successes"], 10);
    assert_eq!(fs::read_to_string(out_dir.join("human-exp2-distances.csv")).unwrap().lines().count(), 5);

    let out = roleprobe(&["human-exp2", "--human-csv", s(&exp1), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
}
