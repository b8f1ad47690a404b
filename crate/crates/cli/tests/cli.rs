use std::path::Path;
use std::process::{Command, Output};

fn gatlink(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatlink"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SBM: &[&str] = &["--dataset", "sbm", "--set", "sbm_nodes_per_block=20", "--set", "epochs=40"];

fn with(base: &[&'static str], rest: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(rest).copied().collect()
}

#[test]
fn florentine_train_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = gatlink(dir.path(), &["--seed", "7", "train"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("runs/florentine-seed7");
    for f in ["model-crimegat.txt", "history-crimegat.jsonl", "split.jsonl", "summary-crimegat.txt", "metrics-crimegat.jsonl"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let header = stdout(&out);
    assert!(header.starts_with("Method"));
    let history = std::fs::read_to_string(run.join("history-crimegat.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(history.lines().next().unwrap()).unwrap();
    assert_eq!(first["epoch"], 1);
    assert!(first["train_loss"].is_number() && first["val_auc"].is_number());
}

#[test]
fn train_then_evaluate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let train = gatlink(dir.path(), &with(SMALL_SBM, &["train", "--methods", "crimegat,svm"]));
    assert!(train.status.success(), "{}", stderr(&train));
    let eval = gatlink(dir.path(), &with(SMALL_SBM, &["evaluate", "--methods", "crimegat,svm"]));
    assert!(eval.status.success(), "{}", stderr(&eval));
    // Evaluation on saved artifacts reproduces the training-time test rows.
    assert_eq!(stdout(&train), stdout(&eval));
}

#[test]
fn evaluate_all_gives_five_rows_in_range() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gatlink(dir.path(), &with(SMALL_SBM, &["split"])).status.success());
    let out = gatlink(dir.path(), &with(SMALL_SBM, &["evaluate", "--all", "--format", "json"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let methods: Vec<&str> = rows.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["crimegat", "gcn", "sage", "svm", "pa"]);
    for r in &rows {
        for k in ["precision", "recall", "f1", "auc_roc"] {
            let x = r[k].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&x), "{k} = {x}");
        }
    }
    let table = gatlink(dir.path(), &with(SMALL_SBM, &["evaluate", "--all"]));
    let header: Vec<String> = stdout(&table).lines().next().unwrap().split_whitespace().map(String::from).collect();
    assert_eq!(header, ["Method", "Precision", "Recall", "F1-Score", "AUC-ROC"]);
}

#[test]
fn preferential_attachment_needs_no_training() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gatlink(dir.path(), &["split"]).status.success());
    let out = gatlink(dir.path(), &["evaluate", "--methods", "pa"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
    let missing = gatlink(dir.path(), &["evaluate", "--methods", "gcn"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("model-gcn.txt"));
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = gatlink(dir.path(), &["--dataset", "no/such/graph.edges", "train"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("no/such/graph.edges"));
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "seed = 1\nlearning_rat = 0.1\n").unwrap();
    let out = gatlink(dir.path(), &["--config", "bad.conf", "train"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.conf:2"));
    assert_eq!(gatlink(dir.path(), &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(gatlink(dir.path(), &["--method", "tree", "train"]).status.code(), Some(1));
    assert_eq!(gatlink(dir.path(), &["--set", "patience=0", "train"]).status.code(), Some(1));
    assert_eq!(gatlink(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = gatlink(dir.path(), &["--set", "learning_rate=1e300", "train"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("epoch"));
}

#[test]
fn schema_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gatlink(dir.path(), &["train"]).status.success());
    let model = dir.path().join("runs/florentine-seed0/model-crimegat.txt");
    let text = std::fs::read_to_string(&model).unwrap().replacen("gatlink-model 1", "gatlink-model 2", 1);
    std::fs::write(&model, text).unwrap();
    let out = gatlink(dir.path(), &["evaluate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schema version"));
}

#[test]
fn architecture_must_match_configuration() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gatlink(dir.path(), &["train"]).status.success());
    let out = gatlink(dir.path(), &["--set", "hidden_dims=8,8", "evaluate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("architecture"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# comment\nseed = 3\nmethod = gcn\nepochs = 5\n").unwrap();
    let out = gatlink(dir.path(), &["--config", "run.conf", "--set", "seed=4", "--method", "sage", "config"]);
    let text = stdout(&out);
    assert!(text.contains("\nseed = 4\n"));
    assert!(text.contains("\nmethod = sage\n"));
    assert!(text.contains("\nepochs = 5\n"));
    let flag_wins = gatlink(dir.path(), &["--config", "run.conf", "--set", "seed=4", "--seed", "6", "config"]);
    assert!(stdout(&flag_wins).contains("\nseed = 6\n"));
}

#[test]
fn explain_reports_and_rejects_baselines() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gatlink(dir.path(), &["train", "--methods", "crimegat,gcn"]).status.success());
    let out = gatlink(dir.path(), &["explain", "--top-k", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("1 ")).count(), 1);
    let report = std::fs::read_to_string(dir.path().join("runs/florentine-seed0/attention.jsonl")).unwrap();
    let ranks = report.lines().filter(|l| l.contains("\"kind\":\"rank\"")).count();
    assert_eq!(ranks, 1);
    assert!(report.contains("\"destination_label\":\"Medici\""));
    let gcn = gatlink(dir.path(), &["explain", "--model", "runs/florentine-seed0/model-gcn.txt"]);
    assert_eq!(gcn.status.code(), Some(1));
    assert!(stderr(&gcn).contains("no attention"));
}

#[test]
fn synthesized_files_load_as_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let synth = gatlink(dir.path(), &["--dataset", "sbm", "--set", "sbm_nodes_per_block=15", "--seed", "2", "synth", "--out", "data"]);
    assert!(synth.status.success(), "{}", stderr(&synth));
    let direct = gatlink(dir.path(), &["--dataset", "sbm", "--set", "sbm_nodes_per_block=15", "--seed", "2", "--set", "epochs=20", "train"]);
    let from_files = gatlink(
        dir.path(),
        &[
            "--dataset",
            "data/sbm-seed2.edges",
            "--set",
            "features=data/sbm-seed2.features",
            "--seed",
            "2",
            "--set",
            "epochs=20",
            "train",
        ],
    );
    assert!(from_files.status.success(), "{}", stderr(&from_files));
    assert_eq!(stdout(&direct), stdout(&from_files));
    let a = std::fs::read(dir.path().join("runs/sbm-seed2/model-crimegat.txt")).unwrap();
    let b = std::fs::read(dir.path().join("runs/sbm-seed2-seed2/model-crimegat.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_dataset_without_features() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("source,target,label\n");
    for i in 0..12 {
        csv.push_str(&format!("n{i},n{},x\n", (i + 1) % 12));
        csv.push_str(&format!("n{i},n{},x\n", (i + 5) % 12));
    }
    std::fs::write(dir.path().join("ring.csv"), csv).unwrap();
    let out = gatlink(dir.path(), &["--dataset", "ring.csv", "--set", "format=csv", "--set", "epochs=10", "train", "--all"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 7);
}

#[test]
fn seed_sweep_is_ordered_and_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = gatlink(dir.path(), &with(SMALL_SBM, &["train", "--seeds", "3,1,2", "--methods", "pa,gcn"]));
    assert!(sweep.status.success(), "{}", stderr(&sweep));
    let text = stdout(&sweep);
    let seeds: Vec<&str> = text.lines().filter(|l| l.starts_with("seed ")).collect();
    assert_eq!(seeds, ["seed 3", "seed 1", "seed 2"]);
    let single = gatlink(dir.path(), &with(SMALL_SBM, &["--seed", "1", "evaluate", "--methods", "pa,gcn"]));
    let block: String = text
        .split("seed 1\n")
        .nth(1)
        .unwrap()
        .split("\n\n")
        .next()
        .unwrap()
        .to_string()
        + "\n";
    assert_eq!(block, stdout(&single));
}
