use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cpmix(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmix"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const QUICK: &[&str] = &["--epochs", "2", "--cp-start-epoch", "1", "--seeds", "0"];

#[test]
fn gen_data_writes_csv_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmix(&["gen-data", "--out", "data", "--rho", "10"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("data/train.json")).unwrap()).unwrap();
    assert_eq!(meta["class_counts"], serde_json::json!([1000, 1000, 100, 100]));
    let csv = fs::read_to_string(dir.path().join("data/test.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("f0,f1,label"));
    assert_eq!(csv.lines().count(), 1 + 4000);
}

#[test]
fn train_then_eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--methods", "erm_bs,cpmix", "--output-dir", "out"];
    args.extend(QUICK);
    let o = cpmix(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let run = dir.path().join("out/cpmix/seed-0");
    for f in [
        "train_log.jsonl",
        "model.bin",
        "metrics.json",
        "confusion.csv",
        "bag.json",
        "dataset.json",
        "run.json",
    ] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert_eq!(
        fs::read_to_string(run.join("train_log.jsonl")).unwrap().lines().count(),
        2
    );

    let o = cpmix(&["gen-data", "--out", "data", "--seeds", "0"], dir.path());
    assert!(o.status.success());
    let o = cpmix(
        &[
            "eval",
            "--model",
            "out/cpmix/seed-0/model.bin",
            "--test",
            "data/test.csv",
            "--train",
            "data/train.json",
            "--out",
            "eval.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    let trained: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(eval["top1"], trained["top1"]);
    assert_eq!(eval["confusion"], trained["confusion"]);

    let o = cpmix(&["report", "out", "--csv", "table.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let cpmix_row = table.lines().find(|l| l.starts_with("cpmix")).unwrap();
    let top1: f64 = cpmix_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((top1 - trained["top1"].as_f64().unwrap()).abs() < 1e-4);
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "epochs = 5\nalpha = 0.7\nmethods = [\"erm_ce\"]\nseeds = [0]\noutput_dir = \"file-out\"\n",
    )
    .unwrap();
    let o = cpmix(
        &["train", "--config", "exp.toml", "--epochs", "1", "--output-dir=cli-out"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let used = fs::read_to_string(dir.path().join("cli-out/config.toml")).unwrap();
    assert!(used.contains("epochs = 1\n"));
    assert!(used.contains("alpha = 0.7\n"));
    assert!(used.contains("batch_size = 100\n"));
    assert!(!dir.path().join("file-out").exists());
}

#[test]
fn config_errors_exit_with_two_and_name_each_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmix(
        &["train", "--alpha", "-1", "--epochs", "many", "--no-such-key", "3"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for field in ["alpha", "epochs", "no_such_key"] {
        assert!(err.contains(&format!("{field}:")), "{field} missing from {err}");
    }
    let o = cpmix(&["sweep", "--rhos", "2,0.5", "--methods", "erm_ce"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho"));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmix(
        &[
            "train",
            "--methods",
            "erm_ce",
            "--seeds",
            "0",
            "--optimizer",
            "sgd",
            "--learning-rate",
            "1e300",
            "--output-dir",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn sweep_writes_combined_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "sweep",
        "--rhos",
        "2,50",
        "--methods",
        "erm_ce,mixup",
        "--output-dir",
        "sw",
    ];
    args.extend(QUICK);
    let o = cpmix(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "rho,method,seed,top1,minority_recall,target_confusion_sum");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(dir.path().join("sw/rho-50/mixup/seed-0/metrics.json").is_file());
}
