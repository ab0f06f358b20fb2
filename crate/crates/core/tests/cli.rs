use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &["--clusters", "6", "--runs", "2", "--atoms", "16", "--code-len", "16"];

fn laks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laks")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path) -> String {
    let data = dir.join("data");
    let out = laks(&[
        "synth",
        "--out",
        data.to_str().unwrap(),
        "--subjects",
        "4",
        "--episodes",
        "1",
        "--frames",
        "24",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data.to_str().unwrap().to_string()
}

fn train(data: &str, model: &Path) -> Output {
    let mut args = vec!["train", "--dataset", data, "--train-subjects", "1,3", "--model", model.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    laks(&args)
}

#[test]
fn synth_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let model = dir.path().join("m.laks");
    let out = train(&data, &model);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("model written"));

    let file = Path::new(&data).join("a02_s01_e01.txt");
    let out = laks(&["predict", "--model", model.to_str().unwrap(), file.to_str().unwrap()]);
    assert!(out.status.success());
    let line = stdout(&out);
    let fields: Vec<&str> = line.trim().split('\t').collect();
    assert_eq!(fields[0], file.to_str().unwrap());
    assert!(["1", "2", "3"].contains(&fields[1]), "{line}");

    let out = laks(&["evaluate", "--dataset", &data, "--model", model.to_str().unwrap(), "--report", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["total"], 12);
    assert_eq!(v["confusion"].as_array().unwrap().len(), 3);
}

#[test]
fn same_seed_gives_identical_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let (a, b) = (dir.path().join("a.laks"), dir.path().join("b.laks"));
    assert!(train(&data, &a).status.success());
    assert!(train(&data, &b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn malformed_sequence_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let model = dir.path().join("m.laks");
    assert!(train(&data, &model).status.success());
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2 3\nnot numbers\n").unwrap();
    let out = laks(&["predict", "--model", model.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn configuration_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "lambda1 = 1\nwhatever = 3\n").unwrap();
    let out = laks(&["evaluate", "--config", cfg.to_str().unwrap(), "--dataset", "."]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    assert_eq!(laks(&["evaluate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(laks(&["evaluate", "--protocol", "sideways", "--dataset", "."]).status.code(), Some(1));
    assert_eq!(laks(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_model_file_is_an_io_error() {
    let out = laks(&["predict", "--model", "/nonexistent/model.laks", "x.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let mut args = vec![
        "sweep",
        "--dataset",
        &data,
        "--train-subjects",
        "1,3",
        "--param",
        "epsilon",
        "--values",
        "0,5",
    ];
    args.extend_from_slice(SMALL);
    let out = laks(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2, "{text}");
    assert!(rows[0].starts_with("0\t") && rows[1].starts_with("5\t"));
}
